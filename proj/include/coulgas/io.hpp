#pragma once

// Report emission: versioned CSV tables (schema=1 header row, then column
// names, then data; no timestamps so reruns are byte-identical) and JSON
// geometry/breakdown dumps.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "coulgas/common.hpp"
#include "coulgas/droplet.hpp"
#include "coulgas/free_energy.hpp"

namespace coulgas {

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size())
            throw ValidationError("CsvWriter: row width mismatch");
        rows_.push_back(cells);
    }

    static std::string num(double v) {
        std::ostringstream ss;
        ss << std::setprecision(17) << v;
        return ss.str();
    }

    std::string str() const {
        std::ostringstream out;
        out << "schema=1\n";
        for (std::size_t i = 0; i < columns_.size(); ++i)
            out << columns_[i] << (i + 1 < columns_.size() ? "," : "\n");
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << row[i] << (i + 1 < row.size() ? "," : "\n");
        }
        return out.str();
    }

    void write(const std::string& path) const {
        std::filesystem::create_directories(std::filesystem::path(path).parent_path());
        std::ofstream f(path);
        if (!f) throw ValidationError("CsvWriter: cannot open " + path);
        f << str();
    }

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

inline nlohmann::json to_json(const DropletGeometry& g) {
    nlohmann::json j;
    j["components"] = nlohmann::json::array();
    for (const auto& c : g.components) j["components"].push_back({c.a, c.b});
    j["outposts"] = g.outposts;
    j["masses"] = g.masses;
    j["euler_char"] = g.euler_char;
    j["case"] = g.central_disk ? "central_disk" : "annular";
    return j;
}

inline nlohmann::json to_json(const ExpansionBreakdown& b) {
    nlohmann::json j;
    j["theorem"] = b.theorem;
    j["c1_n2"] = b.c1;
    j["c2_nlogn"] = b.c2;
    j["c3_n"] = b.c3;
    j["c4_logn"] = b.c4;
    j["c5_const"] = b.c5;
    j["gn"] = b.gn;
    j["total"] = b.total();
    j["claimed_error"] = b.claimed_error;
    if (b.large_term_warning) j["large_term_warning"] = true;
    return j;
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream f(path);
    if (!f) throw ValidationError("write_json: cannot open " + path);
    f << j.dump(2) << "\n";
}

inline CsvWriter norm_table_csv(const NormTable& t) {
    CsvWriter csv({"j", "log_hj", "method", "err"});
    for (const auto& e : t.entries) {
        const char* m = e.method == NormMethod::quadrature
                            ? "quadrature"
                            : (e.method == NormMethod::laplace ? "laplace"
                                                               : "gamma_closed_form");
        csv.add_row({std::to_string(e.j), CsvWriter::num(e.log_h), m,
                     CsvWriter::num(e.est_err)});
    }
    return csv;
}

}  // namespace coulgas
