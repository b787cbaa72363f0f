#pragma once

// Batch-run configuration: INI-style sections of key = value lines, with
// typed validation and line-anchored error messages.  Lists are whitespace
// separated.  CLI flags override individual fields after parsing.

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coulgas/common.hpp"
#include "coulgas/droplet.hpp"
#include "coulgas/potential.hpp"

namespace coulgas {

struct RunConfig {
    // [potential]
    std::string family = "ginibre";
    std::vector<double> coefficients;       // even_polynomial
    std::vector<double> base_coefficients;  // bump families
    double bump_center = 0.0;
    double bump_depth = 0.0;
    double bump_width = 0.0;

    // [test_function]
    std::string tf_kind = "r2";
    double tf_value = 0.0;   // const
    double tf_center = 0.0;  // window kinds
    double tf_width = 0.1;

    // [pert]
    std::vector<double> s_values{0.0};
    double alpha = 0.0;

    // [run]
    std::vector<long long> n_values{100};

    // [policy]
    double c_cut = 20.0;
    int workers = 0;
    bool laplace_bulk = false;

    // [sampler]
    std::uint64_t seed = 1;
    std::uint64_t samples = 100000;

    // [output]
    std::string out_dir = "out";

    RadialPotential build_potential() const {
        if (family == "ginibre") return make_ginibre();
        if (family == "even_polynomial") {
            if (coefficients.empty())
                throw ValidationError("potential.coefficients required for even_polynomial");
            return make_even_polynomial(coefficients);
        }
        if (family == "base_plus_bump")
            return make_base_plus_bump(make_even_polynomial(base_coefficients), bump_center,
                                       bump_depth, bump_width);
        if (family == "outpost_bump")
            return solve_outpost_bump(make_even_polynomial(base_coefficients), bump_center,
                                      bump_width);
        if (family == "inner_outpost")
            return solve_inner_outpost(make_even_polynomial(base_coefficients), bump_center,
                                       bump_width);
        if (family == "origin_outpost")
            return solve_origin_outpost(make_even_polynomial(base_coefficients), bump_width);
        throw ValidationError("unknown potential family '" + family + "'");
    }

    TestFunction build_test_function() const {
        if (tf_kind == "const") return tf_const(tf_value);
        if (tf_kind == "r2") return tf_r2();
        if (tf_kind == "cosh_window") return tf_cosh_window(tf_center, tf_width);
        if (tf_kind == "indicator_smoothed") return tf_smooth_indicator(tf_center, tf_width);
        if (tf_kind == "log2") return tf_log2();
        throw ValidationError("unknown test function '" + tf_kind + "'");
    }

    void validate() const {
        for (long long n : n_values)
            if (n < 2) throw ValidationError("run.n values must be >= 2");
        if (!(alpha > -1.0)) throw ValidationError("pert.alpha must be > -1");
        if (n_values.empty()) throw ValidationError("run.n must not be empty");
    }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline std::vector<double> parse_doubles(const std::string& v, int line) {
    std::istringstream ss(v);
    std::vector<double> out;
    double x;
    while (ss >> x) out.push_back(x);
    if (out.empty() || !ss.eof())
        throw ValidationError("line " + std::to_string(line) + ": expected numeric list, got '" +
                              v + "'");
    return out;
}

inline double parse_double(const std::string& v, int line) {
    auto xs = parse_doubles(v, line);
    if (xs.size() != 1)
        throw ValidationError("line " + std::to_string(line) + ": expected one number");
    return xs[0];
}

inline bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ValidationError("line " + std::to_string(line) + ": expected true/false");
}

}  // namespace config_detail

inline RunConfig parse_config_text(const std::string& text) {
    using namespace config_detail;
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": malformed section header '" + t + "'");
            section = t.substr(1, t.size() - 2);
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        std::string qual = section + "." + key;

        if (qual == "potential.family") cfg.family = val;
        else if (qual == "potential.coefficients") cfg.coefficients = parse_doubles(val, line_no);
        else if (qual == "potential.base_coefficients")
            cfg.base_coefficients = parse_doubles(val, line_no);
        else if (qual == "potential.bump_center") cfg.bump_center = parse_double(val, line_no);
        else if (qual == "potential.bump_depth") cfg.bump_depth = parse_double(val, line_no);
        else if (qual == "potential.bump_width") cfg.bump_width = parse_double(val, line_no);
        else if (qual == "test_function.kind") cfg.tf_kind = val;
        else if (qual == "test_function.value") cfg.tf_value = parse_double(val, line_no);
        else if (qual == "test_function.center") cfg.tf_center = parse_double(val, line_no);
        else if (qual == "test_function.width") cfg.tf_width = parse_double(val, line_no);
        else if (qual == "pert.s") cfg.s_values = parse_doubles(val, line_no);
        else if (qual == "pert.alpha") cfg.alpha = parse_double(val, line_no);
        else if (qual == "run.n") {
            cfg.n_values.clear();
            for (double x : parse_doubles(val, line_no))
                cfg.n_values.push_back(static_cast<long long>(x));
        } else if (qual == "policy.c_cut") cfg.c_cut = parse_double(val, line_no);
        else if (qual == "policy.workers")
            cfg.workers = static_cast<int>(parse_double(val, line_no));
        else if (qual == "policy.laplace_bulk") cfg.laplace_bulk = parse_bool(val, line_no);
        else if (qual == "sampler.seed")
            cfg.seed = static_cast<std::uint64_t>(parse_double(val, line_no));
        else if (qual == "sampler.samples")
            cfg.samples = static_cast<std::uint64_t>(parse_double(val, line_no));
        else if (qual == "output.dir") cfg.out_dir = val;
        else
            throw ValidationError("line " + std::to_string(line_no) + ": unknown key '" + qual +
                                  "'");
    }
    cfg.validate();
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace coulgas
