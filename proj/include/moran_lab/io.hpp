#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "moran_lab/errors.hpp"
#include "moran_lab/power.hpp"

namespace moran {

using Json = nlohmann::ordered_json;

inline std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::vector<std::string> theta_columns(std::size_t dim) {
    if (dim == 1) return {"theta"};
    std::vector<std::string> cols;
    for (std::size_t i = 0; i < dim; ++i) cols.push_back("theta_" + std::to_string(i + 1));
    return cols;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvTable& row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw Error("csv row has " + std::to_string(cells.size()) +
                                                        " cells, header has " + std::to_string(header_.size()));
        rows_.push_back(std::move(cells));
        return *this;
    }

    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t size() const noexcept { return rows_.size(); }

    std::string str() const {
        std::string out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

    void write(const std::filesystem::path& path) const { write_text(path, str()); }

    static void write_text(const std::filesystem::path& path, const std::string& text) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot open " + path.string() + " for writing");
        f << text;
        if (!f) throw Error("write failed for " + path.string());
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline void append_theta(std::vector<std::string>& cells, const Shift& theta) {
    for (double c : theta.components()) cells.push_back(fmt_num(c));
}

inline void append_estimate(std::vector<std::string>& cells, const PowerEstimate& e) {
    cells.push_back(fmt_num(e.value));
    cells.push_back(fmt_num(e.std_error));
    cells.push_back(std::to_string(e.n_samples));
    cells.push_back(to_string(e.method));
}

/// test, theta..., value, std_error, n, method
inline CsvTable curve_table(std::size_t dim) {
    std::vector<std::string> h{"test"};
    for (auto& c : theta_columns(dim)) h.push_back(c);
    for (const char* c : {"value", "std_error", "n", "method"}) h.emplace_back(c);
    return CsvTable(std::move(h));
}

inline void add_curve(CsvTable& t, const PowerCurve& c) {
    for (std::size_t i = 0; i < c.theta_grid.size(); ++i) {
        std::vector<std::string> cells{c.test_id};
        append_theta(cells, c.theta_grid[i]);
        append_estimate(cells, c.estimates[i]);
        t.row(std::move(cells));
    }
}

inline Json to_json(const Shift& s) {
    if (s.dim() == 1) return s[0];
    Json a = Json::array();
    for (double c : s.components()) a.push_back(c);
    return a;
}

inline Json to_json(const PowerEstimate& e) {
    return Json{{"value", e.value}, {"std_error", e.std_error}, {"n", e.n_samples}, {"method", to_string(e.method)}};
}

inline void write_json(const std::filesystem::path& path, const Json& j) { CsvTable::write_text(path, j.dump(2) + "\n"); }

} // namespace moran
