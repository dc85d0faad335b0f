#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "vtwin/errors.hpp"
#include "vtwin/features.hpp"
#include "vtwin/rng.hpp"

namespace vtwin {

/// Majority vote over the k nearest training rows (Euclidean). k must be odd
/// so the two-class vote cannot tie; distance ties break toward the lower
/// training-row index, which the sort below preserves.
inline int knn_predict(const FeatureTable& train, std::span<const double> row, std::size_t k) {
    if (train.n_rows() == 0) throw empty_input_error("knn: empty training table");
    if (!train.labels) throw invalid_parameter_error("knn: training table has no labels");
    if (k == 0 || k % 2 == 0) throw invalid_parameter_error("knn: k must be odd and positive");
    if (k > train.n_rows()) throw invalid_parameter_error("knn: k exceeds training size");
    if (row.size() != train.n_cols()) throw dimension_mismatch_error("knn: query width mismatch");

    std::vector<std::pair<double, std::size_t>> dist(train.n_rows());
    for (std::size_t i = 0; i < train.n_rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double d = train.rows[i][j] - row[j];
            s += d * d;
        }
        dist[i] = {s, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t attack = 0;
    for (std::size_t i = 0; i < k; ++i)
        if ((*train.labels)[dist[i].second] == kAttack) ++attack;
    return 2 * attack > k ? kAttack : kBenign;
}

inline std::vector<int> knn_predict_all(const FeatureTable& train, const FeatureTable& test,
                                        std::size_t k) {
    std::vector<int> out(test.n_rows());
    for (std::size_t i = 0; i < test.n_rows(); ++i) out[i] = knn_predict(train, test.rows[i], k);
    return out;
}

struct SvmModel {
    std::vector<double> weights;
    double bias = 0.0;

    double decision(std::span<const double> row) const {
        if (row.size() != weights.size()) throw dimension_mismatch_error("svm: query width mismatch");
        double s = bias;
        for (std::size_t j = 0; j < row.size(); ++j) s += weights[j] * row[j];
        return s;
    }
};

/// Full-batch subgradient descent on the L2-regularized hinge loss with step
/// size 1/(lambda*(t+1)). Labels are mapped benign -> -1, attack -> +1.
inline SvmModel svm_train(const FeatureTable& train, std::size_t epochs = 200,
                          double lambda = 1e-3) {
    if (train.n_rows() == 0) throw empty_input_error("svm: empty training table");
    if (!train.labels) throw invalid_parameter_error("svm: training table has no labels");
    if (lambda <= 0.0) throw invalid_parameter_error("svm: lambda must be positive");
    bool saw[2] = {false, false};
    for (int y : *train.labels) saw[y] = true;
    if (!saw[0] || !saw[1]) throw single_class_error("svm: training labels are single-class");

    const std::size_t n = train.n_rows(), d = train.n_cols();
    SvmModel model;
    model.weights.assign(d, 0.0);
    std::vector<double> grad_w(d);
    for (std::size_t t = 0; t < epochs; ++t) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = (*train.labels)[i] == kAttack ? 1.0 : -1.0;
            if (y * model.decision(train.rows[i]) < 1.0) {
                for (std::size_t j = 0; j < d; ++j) grad_w[j] -= y * train.rows[i][j];
                grad_b -= y;
            }
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        const double eta = 1.0 / (lambda * static_cast<double>(t + 1));
        for (std::size_t j = 0; j < d; ++j)
            model.weights[j] -= eta * (lambda * model.weights[j] + grad_w[j] * inv_n);
        model.bias -= eta * grad_b * inv_n;
    }
    return model;
}

inline int svm_predict(const SvmModel& model, std::span<const double> row) {
    return model.decision(row) >= 0.0 ? kAttack : kBenign;
}

inline std::vector<int> svm_predict_all(const SvmModel& model, const FeatureTable& test) {
    std::vector<int> out(test.n_rows());
    for (std::size_t i = 0; i < test.n_rows(); ++i) out[i] = svm_predict(model, test.rows[i]);
    return out;
}

} // namespace vtwin
