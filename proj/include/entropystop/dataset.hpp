#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "entropystop/errors.hpp"
#include "entropystop/matrix.hpp"
#include "entropystop/rng.hpp"

namespace entropystop {

// Feature matrix with optional 0/1 labels (1 = outlier).
struct Dataset {
    Matrix x;
    std::optional<std::vector<int>> labels;
    std::string name;

    std::size_t n() const { return x.rows(); }
    std::size_t d() const { return x.cols(); }
    bool labeled() const { return labels.has_value(); }

    std::size_t outlier_count() const {
        if (!labels) return 0;
        return static_cast<std::size_t>(std::count(labels->begin(), labels->end(), 1));
    }
};

inline void validate(const Dataset& ds, std::size_t min_rows = 1) {
    if (ds.n() < min_rows) {
        throw InvalidInput("dataset '" + ds.name + "' has " + std::to_string(ds.n()) + " rows, need >= " +
                           std::to_string(min_rows));
    }
    if (ds.d() < 1) throw InvalidInput("dataset '" + ds.name + "' has no feature columns");
    if (ds.labels) {
        if (ds.labels->size() != ds.n()) throw InvalidInput("label count does not match row count");
        for (int v : *ds.labels)
            if (v != 0 && v != 1) throw InvalidInput("labels must be 0 or 1");
    }
}

// Column-wise z-scoring with the population standard deviation. Constant
// columns become all zeros.
inline Dataset standardize(const Dataset& ds) {
    if (ds.n() == 0) throw InvalidInput("standardize: empty dataset");
    validate(ds, 1);
    const ColumnStats stats = col_stats(ds.x);
    Dataset out = ds;
    for (std::size_t i = 0; i < out.n(); ++i) {
        for (std::size_t j = 0; j < out.d(); ++j) {
            const double sd = stats.stddev[j];
            out.x(i, j) = sd > 0.0 ? (ds.x(i, j) - stats.mean[j]) / sd : 0.0;
        }
    }
    return out;
}

// m distinct indices from [0, n), uniformly without replacement (partial
// Fisher-Yates).
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, RngStream& rng) {
    if (m > n) throw InvalidInput("sample_indices: m=" + std::to_string(m) + " > n=" + std::to_string(n));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    return idx;
}

inline Dataset take_rows(const Dataset& ds, std::span<const std::size_t> idx) {
    Dataset out{select_rows(ds.x, idx), std::nullopt, ds.name};
    if (ds.labels) {
        std::vector<int> l(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) l[i] = (*ds.labels)[idx[i]];
        out.labels = std::move(l);
    }
    return out;
}

inline Dataset sample_rows(const Dataset& ds, std::size_t m, RngStream& rng) {
    if (m < 1) throw InvalidInput("sample_rows: m must be >= 1");
    const auto idx = sample_indices(ds.n(), m, rng);
    return take_rows(ds, idx);
}

// Keeps only label-0 rows; used to strip original anomalies before injection.
inline Dataset drop_outliers(const Dataset& ds) {
    if (!ds.labels) return ds;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ds.n(); ++i)
        if ((*ds.labels)[i] == 0) keep.push_back(i);
    return take_rows(ds, keep);
}

// ---------------------------------------------------------------------------
// CSV: header row, decimal feature columns, optional trailing `label` column.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& field, std::size_t line_no) {
    const std::string t = trim(field);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ParseError("not a number: '" + t + "'", line_no);
    }
    if (!std::isfinite(v)) throw ParseError("non-finite value: '" + t + "'", line_no);
    return v;
}

inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, std::string name = {}) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) {
            header = detail::split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw ParseError("missing header row", line_no);
    for (auto& h : header) h = detail::trim(h);
    if (line_no == 1 && header[0].starts_with("\xEF\xBB\xBF")) header[0] = header[0].substr(3);

    const bool has_label = header.back() == "label";
    const std::size_t d = header.size() - (has_label ? 1 : 0);
    if (d == 0) throw ParseError("no feature columns", line_no);

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        for (std::size_t j = 0; j < d; ++j) values.push_back(detail::parse_double(fields[j], line_no));
        if (has_label) {
            const std::string l = detail::trim(fields.back());
            if (l == "0" || l == "0.0") {
                labels.push_back(0);
            } else if (l == "1" || l == "1.0") {
                labels.push_back(1);
            } else {
                throw ParseError("label must be 0 or 1, got '" + l + "'", line_no);
            }
        }
        ++rows;
    }
    Dataset ds{Matrix(rows, d, std::move(values)), std::nullopt, std::move(name)};
    if (has_label) ds.labels = std::move(labels);
    return ds;
}

inline Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::string stem = path;
    if (const auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
    if (const auto dot = stem.rfind(".csv"); dot != std::string::npos && dot + 4 == stem.size()) stem.resize(dot);
    return parse_csv(in, stem);
}

// Shortest round-trip representation, so read(write(ds)) is bit-exact.
inline void write_csv(std::ostream& out, const Dataset& ds) {
    for (std::size_t j = 0; j < ds.d(); ++j) out << (j ? "," : "") << "x" << j;
    if (ds.labels) out << ",label";
    out << '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.d(); ++j) out << (j ? "," : "") << detail::format_double(ds.x(i, j));
        if (ds.labels) out << ',' << (*ds.labels)[i];
        out << '\n';
    }
}

inline void write_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    write_csv(out, ds);
}

}  // namespace entropystop
