// coulgas: exact and asymptotic free energies of radially symmetric 2D
// Coulomb gases, plus Monte Carlo verification of their fluctuation laws.
//
// Usage:
//   coulgas <command> [--config PATH] [--n LIST] [--s LIST] [--alpha X]
//                     [--seed U64] [--samples U64] [--out DIR] [--workers K]
// Commands: droplet | functionals | free-energy | fluct | outpost | identities

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coulgas/cli.hpp"

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& text) {
    std::string s = text;
    for (char& c : s)
        if (c == ',') c = ' ';
    std::istringstream ss(s);
    std::vector<T> out;
    T v;
    while (ss >> v) out.push_back(v);
    if (out.empty() || !ss.eof())
        throw coulgas::ValidationError("cannot parse list '" + text + "'");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radial Coulomb gas free energies and fluctuations"};
    std::string command;
    std::string config_path, n_list, s_list, out_dir;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0, samples = 0;
    int workers = -1;
    bool have_seed = false, have_samples = false;

    app.add_option("command", command,
                   "droplet | functionals | free-energy | fluct | outpost | identities")
        ->required();
    app.add_option("--config", config_path, "INI config file");
    app.add_option("--n", n_list, "particle numbers, comma separated");
    app.add_option("--s", s_list, "perturbation strengths, comma separated");
    app.add_option("--alpha", alpha, "point charge strength (> -1)");
    app.add_option("--seed", seed, "sampler seed")->trigger_on_parse();
    app.add_option("--samples", samples, "Monte Carlo sample count");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--workers", workers, "worker thread count (0 = hardware)");

    try {
        app.parse(argc, argv);
        have_seed = app.count("--seed") > 0;
        have_samples = app.count("--samples") > 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        coulgas::RunConfig cfg;
        if (!config_path.empty()) cfg = coulgas::parse_config_file(config_path);
        if (!n_list.empty()) cfg.n_values = parse_list<long long>(n_list);
        if (!s_list.empty()) cfg.s_values = parse_list<double>(s_list);
        if (!std::isnan(alpha)) cfg.alpha = alpha;
        if (have_seed) cfg.seed = seed;
        if (have_samples) cfg.samples = samples;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (workers >= 0) cfg.workers = workers;
        cfg.validate();
        return coulgas::dispatch(command, cfg, std::cout);
    } catch (const coulgas::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const coulgas::Error& e) {
        std::cerr << "numerical gate failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
