#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtwin/errors.hpp"

namespace vtwin {

constexpr int kBenign = 0;
constexpr int kAttack = 1;

/// Rectangular numeric matrix with named columns and optional binary labels
/// (0 = benign, 1 = attack).
struct FeatureTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> rows;
    std::optional<std::vector<int>> labels;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return column_names.size(); }

    std::size_t col_index(const std::string& name) const {
        for (std::size_t i = 0; i < column_names.size(); ++i)
            if (column_names[i] == name) return i;
        throw invalid_parameter_error("feature table has no column '" + name + "'");
    }

    bool has_column(const std::string& name) const {
        return std::find(column_names.begin(), column_names.end(), name) != column_names.end();
    }

    void validate() const {
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != column_names.size())
                throw dimension_mismatch_error("feature table row " + std::to_string(r) +
                                               " width mismatch");
            for (double v : rows[r])
                if (!std::isfinite(v))
                    throw nonfinite_error("feature table row " + std::to_string(r) +
                                          " contains a non-finite value");
        }
        if (labels && labels->size() != rows.size())
            throw dimension_mismatch_error("label vector length does not match row count");
    }
};

/// Keep only the given columns, in the given order. Labels travel along.
inline FeatureTable select_columns(const FeatureTable& t, std::span<const std::size_t> cols) {
    FeatureTable out;
    for (std::size_t c : cols) {
        if (c >= t.n_cols()) throw invalid_parameter_error("column index out of range");
        out.column_names.push_back(t.column_names[c]);
    }
    out.rows.reserve(t.n_rows());
    for (const auto& row : t.rows) {
        std::vector<double> r;
        r.reserve(cols.size());
        for (std::size_t c : cols) r.push_back(row[c]);
        out.rows.push_back(std::move(r));
    }
    out.labels = t.labels;
    return out;
}

inline FeatureTable take_rows(const FeatureTable& t, std::span<const std::size_t> idx) {
    FeatureTable out;
    out.column_names = t.column_names;
    out.rows.reserve(idx.size());
    std::vector<int> lab;
    for (std::size_t i : idx) {
        out.rows.push_back(t.rows.at(i));
        if (t.labels) lab.push_back((*t.labels).at(i));
    }
    if (t.labels) out.labels = std::move(lab);
    return out;
}

// Ground-truth columns must never reach a predictor's input.
inline void check_no_label_columns(const FeatureTable& t) {
    for (const auto& name : t.column_names)
        if (name == "label" || name == "label_hint" || name == "attack")
            throw invalid_parameter_error("feature input contains ground-truth column '" + name +
                                          "'");
}

/// Zero-mean unit-variance transform, fit on the training split only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stdev;

    void fit(const FeatureTable& t) {
        if (t.n_rows() == 0) throw empty_input_error("standardizer: empty table");
        const std::size_t d = t.n_cols();
        mean.assign(d, 0.0);
        stdev.assign(d, 0.0);
        for (const auto& row : t.rows)
            for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
        for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(t.n_rows());
        for (const auto& row : t.rows)
            for (std::size_t j = 0; j < d; ++j) {
                const double dx = row[j] - mean[j];
                stdev[j] += dx * dx;
            }
        for (std::size_t j = 0; j < d; ++j) {
            stdev[j] = std::sqrt(stdev[j] / static_cast<double>(t.n_rows()));
            if (stdev[j] < 1e-12) stdev[j] = 1.0; // constant column: pass through centered
        }
    }

    void transform_row(std::span<const double> in, std::span<double> out) const {
        for (std::size_t j = 0; j < mean.size(); ++j) out[j] = (in[j] - mean[j]) / stdev[j];
    }

    FeatureTable apply(const FeatureTable& t) const {
        if (t.n_cols() != mean.size())
            throw dimension_mismatch_error("standardizer: column count mismatch");
        FeatureTable out = t;
        for (auto& row : out.rows)
            for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / stdev[j];
        return out;
    }
};

/// Min-max scale every column into [0, 1]; chi-square scoring needs
/// non-negative inputs. Constant columns map to 0.
inline FeatureTable minmax_scale(const FeatureTable& t) {
    FeatureTable out = t;
    const std::size_t d = t.n_cols();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& row : t.rows)
        for (std::size_t j = 0; j < d; ++j) {
            lo[j] = std::min(lo[j], row[j]);
            hi[j] = std::max(hi[j], row[j]);
        }
    for (auto& row : out.rows)
        for (std::size_t j = 0; j < d; ++j)
            row[j] = (hi[j] > lo[j]) ? (row[j] - lo[j]) / (hi[j] - lo[j]) : 0.0;
    return out;
}

} // namespace vtwin
