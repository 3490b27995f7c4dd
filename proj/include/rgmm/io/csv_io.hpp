#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/model.hpp"

namespace rgmm::io {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, r.ptr);
}

/// Columns x0..x{d−1}, then "label" and "corrupted" when present. An optional first line
/// "# seed=N" records the generating seed.
inline void write_samples_csv(std::ostream& out, const SampleSet& s, std::optional<std::uint64_t> seed = std::nullopt) {
    if (seed) out << "# seed=" << *seed << "\n";
    Index d = s.dim();
    bool labels = s.has_labels();
    bool mask = static_cast<Index>(s.corrupted.size()) == s.size();
    for (Index j = 0; j < d; ++j) out << (j ? "," : "") << "x" << j;
    if (labels) out << ",label";
    if (mask) out << ",corrupted";
    out << "\n";
    for (Index i = 0; i < s.size(); ++i) {
        for (Index j = 0; j < d; ++j) out << (j ? "," : "") << format_double(s.points(i, j));
        if (labels) out << "," << s.labels[static_cast<std::size_t>(i)];
        if (mask) out << "," << (s.corrupted[static_cast<std::size_t>(i)] ? 1 : 0);
        out << "\n";
    }
}

inline void save_samples_csv(const std::string& path, const SampleSet& s, std::optional<std::uint64_t> seed = std::nullopt) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_samples_csv(out, s, seed);
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_number(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw InvalidInput("samples csv line " + std::to_string(line) + ": not a number: '" + s + "'");
    return v;
}

}  // namespace detail

/// Reads a sample CSV; columns named "label" and "corrupted" are optional, every other
/// column is a coordinate. Lines starting with '#' are skipped.
inline SampleSet read_samples_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        header = detail::split_csv_line(line);
        break;
    }
    if (header.empty()) throw InvalidInput("samples csv: missing header");
    int label_col = -1, mask_col = -1;
    std::vector<std::size_t> coord_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "label") label_col = static_cast<int>(c);
        else if (header[c] == "corrupted") mask_col = static_cast<int>(c);
        else coord_cols.push_back(c);
    }
    if (coord_cols.empty()) throw InvalidInput("samples csv: no coordinate columns");
    std::vector<std::vector<double>> rows;
    SampleSet s;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) throw InvalidInput("samples csv line " + std::to_string(line_no) + ": wrong column count");
        std::vector<double> r;
        for (std::size_t c : coord_cols) r.push_back(detail::parse_number(cells[c], line_no));
        rows.push_back(std::move(r));
        if (label_col >= 0) s.labels.push_back(static_cast<int>(detail::parse_number(cells[static_cast<std::size_t>(label_col)], line_no)));
        if (mask_col >= 0) s.corrupted.push_back(detail::parse_number(cells[static_cast<std::size_t>(mask_col)], line_no) != 0.0);
    }
    s.points.resize(static_cast<Index>(rows.size()), static_cast<Index>(coord_cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < coord_cols.size(); ++j) s.points(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    if (!s.points.allFinite()) throw InvalidInput("samples csv: non-finite coordinate");
    return s;
}

inline SampleSet load_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    return read_samples_csv(in);
}

}  // namespace rgmm::io
