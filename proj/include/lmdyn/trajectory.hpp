// trajectory.hpp — Sampled time series, CSV persistence, and record comparison

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lmdyn/errors.hpp"

namespace lmdyn::io {

struct TrajectoryRecord {
    std::vector<std::string> columns;        // observable names, excluding time
    std::vector<double> time;
    std::vector<std::vector<double>> rows;   // rows[i].size() == columns.size()
    std::map<std::string, std::string> metadata;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<double> column(const std::string& name) const {
        const int idx = column_index(name);
        if (idx < 0) throw InvalidParameter("trajectory: unknown column " + name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& row : rows) out.push_back(row[static_cast<std::size_t>(idx)]);
        return out;
    }
};

namespace detail {

inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15e", v);
    return buf;
}

}  // namespace detail

inline void write_csv(const TrajectoryRecord& record, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << "# lmdyn-csv v1\n";
    for (const auto& [key, value] : record.metadata) out << "# " << key << "=" << value << "\n";
    out << "t";
    for (const auto& name : record.columns) out << "," << name;
    out << "\n";
    for (std::size_t i = 0; i < record.time.size(); ++i) {
        out << detail::format_value(record.time[i]);
        for (double v : record.rows[i]) out << "," << detail::format_value(v);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

inline TrajectoryRecord read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    TrajectoryRecord record;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                std::string key = line.substr(1, eq - 1);
                key.erase(0, key.find_first_not_of(' '));
                key.erase(key.find_last_not_of(' ') + 1);
                record.metadata[key] = line.substr(eq + 1);
            }
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        if (!have_header) {
            bool first = true;
            while (std::getline(ss, cell, ',')) {
                if (!first) record.columns.push_back(cell);
                first = false;
            }
            have_header = true;
            continue;
        }
        std::vector<double> row;
        bool first = true;
        while (std::getline(ss, cell, ',')) {
            const double value = std::stod(cell);
            if (first)
                record.time.push_back(value);
            else
                row.push_back(value);
            first = false;
        }
        if (row.size() != record.columns.size())
            throw std::runtime_error("read_csv: ragged row in " + path);
        record.rows.push_back(std::move(row));
    }
    return record;
}

struct ColumnDiff {
    std::string name;
    double max_abs{0.0};
    double rms{0.0};
    double first_exceedance_time{0.0};
    bool exceeded{false};
};

struct CompareReport {
    std::vector<ColumnDiff> diffs;
    double tolerance{0.0};
    bool pass{true};
};

// Pointwise comparison on a shared time grid; refuses mismatched grids.
inline CompareReport compare(const TrajectoryRecord& a, const TrajectoryRecord& b,
                             const std::vector<std::string>& columns, double tolerance) {
    if (a.time.size() != b.time.size())
        throw GridMismatchError("compare: records have different sample counts");
    for (std::size_t i = 0; i < a.time.size(); ++i)
        if (std::abs(a.time[i] - b.time[i]) > 1e-9 * std::max(1.0, std::abs(a.time[i])))
            throw GridMismatchError("compare: time grids differ at sample " + std::to_string(i));

    CompareReport report;
    report.tolerance = tolerance;
    for (const auto& name : columns) {
        const auto ca = a.column(name);
        const auto cb = b.column(name);
        ColumnDiff diff;
        diff.name = name;
        double sq = 0.0;
        for (std::size_t i = 0; i < ca.size(); ++i) {
            const double d = std::abs(ca[i] - cb[i]);
            sq += d * d;
            if (d > diff.max_abs) diff.max_abs = d;
            if (!diff.exceeded && d > tolerance) {
                diff.exceeded = true;
                diff.first_exceedance_time = a.time[i];
            }
        }
        diff.rms = ca.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(ca.size()));
        if (diff.exceeded) report.pass = false;
        report.diffs.push_back(std::move(diff));
    }
    return report;
}

}  // namespace lmdyn::io
