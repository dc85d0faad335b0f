#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "vtwin/baselines.hpp"
#include "vtwin/errors.hpp"
#include "vtwin/features.hpp"
#include "vtwin/metrics.hpp"
#include "vtwin/mlp.hpp"
#include "vtwin/rng.hpp"

namespace vtwin {

// Enumerator order doubles as the tie-break priority when validation scores
// are equal: earlier wins.
enum class FsMethod { rfe = 0, backward = 1, chi2 = 2, fisher = 3, anova = 4 };

inline constexpr std::array<FsMethod, 5> kAllFsMethods{
    FsMethod::rfe, FsMethod::backward, FsMethod::chi2, FsMethod::fisher, FsMethod::anova};

inline const char* fs_method_name(FsMethod m) {
    switch (m) {
        case FsMethod::rfe: return "rfe";
        case FsMethod::backward: return "backward";
        case FsMethod::chi2: return "chi2";
        case FsMethod::fisher: return "fisher";
        case FsMethod::anova: return "anova";
    }
    return "?";
}

inline FsMethod fs_method_from_name(const std::string& name) {
    for (FsMethod m : kAllFsMethods)
        if (name == fs_method_name(m)) return m;
    throw invalid_parameter_error("unknown feature selection method: " + name);
}

struct FsResult {
    FsMethod method{};
    std::vector<double> scores;        // one per input column, higher = better
    std::vector<std::size_t> selected; // k column indices, ascending
};

/// Probe classifier used to judge candidate feature subsets: a small
/// multilayer perceptron with a fixed training recipe.
struct ProbeConfig {
    std::size_t epochs = 30;
    std::array<std::size_t, 3> hidden{16, 8, 4};
    double learning_rate = 0.05;
    double validation_fraction = 0.3; // for the internal split of backward elimination
};

namespace detail {

inline void require_two_classes(const FeatureTable& t, const char* what) {
    if (!t.labels) throw invalid_parameter_error(std::string(what) + ": table has no labels");
    bool saw[2] = {false, false};
    for (int y : *t.labels) saw[y] = true;
    if (!saw[0] || !saw[1]) throw single_class_error(std::string(what) + ": labels are single-class");
}

struct ClassStats {
    std::array<std::size_t, 2> count{};
    std::array<double, 2> mean{};
    std::array<double, 2> var{}; // population variance within class
    double grand_mean = 0.0;
};

inline ClassStats class_stats(const FeatureTable& t, std::size_t col) {
    ClassStats s;
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        const int y = (*t.labels)[i];
        ++s.count[y];
        s.mean[y] += t.rows[i][col];
        s.grand_mean += t.rows[i][col];
    }
    for (int c = 0; c < 2; ++c)
        if (s.count[c]) s.mean[c] /= static_cast<double>(s.count[c]);
    s.grand_mean /= static_cast<double>(t.n_rows());
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        const int y = (*t.labels)[i];
        const double d = t.rows[i][col] - s.mean[y];
        s.var[y] += d * d;
    }
    for (int c = 0; c < 2; ++c)
        if (s.count[c]) s.var[c] /= static_cast<double>(s.count[c]);
    return s;
}

inline constexpr double kFsEpsilon = 1e-12;
inline constexpr std::size_t kChi2Bins = 10;

inline double chi2_contingency(const std::vector<std::array<double, 2>>& observed) {
    double col_total[2] = {0.0, 0.0};
    double grand = 0.0;
    std::vector<double> row_total(observed.size(), 0.0);
    for (std::size_t r = 0; r < observed.size(); ++r) {
        for (int c = 0; c < 2; ++c) {
            row_total[r] += observed[r][c];
            col_total[c] += observed[r][c];
            grand += observed[r][c];
        }
    }
    if (grand <= 0.0) return 0.0;
    double stat = 0.0;
    for (std::size_t r = 0; r < observed.size(); ++r)
        for (int c = 0; c < 2; ++c) {
            const double expected = row_total[r] * col_total[c] / grand;
            if (expected > 0.0) {
                const double d = observed[r][c] - expected;
                stat += d * d / expected;
            }
        }
    return stat;
}

// Equal-width bins over the column range double as min-max scaling: the bin
// index is invariant under any positive affine rescale of the column.
inline double chi2_score_column(const FeatureTable& t, std::size_t col) {
    double lo = t.rows[0][col], hi = lo;
    for (const auto& row : t.rows) {
        lo = std::min(lo, row[col]);
        hi = std::max(hi, row[col]);
    }
    std::vector<std::array<double, 2>> counts(kChi2Bins, {0.0, 0.0});
    const double span = hi - lo;
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        std::size_t bin = 0;
        if (span > 0.0) {
            bin = static_cast<std::size_t>((t.rows[i][col] - lo) / span *
                                           static_cast<double>(kChi2Bins));
            bin = std::min(bin, kChi2Bins - 1);
        }
        counts[bin][(*t.labels)[i]] += 1.0;
    }
    return chi2_contingency(counts);
}

inline double anova_score_column(const FeatureTable& t, std::size_t col) {
    const ClassStats s = class_stats(t, col);
    const std::size_t n = t.n_rows();
    double ssb = 0.0, ssw = 0.0;
    for (int c = 0; c < 2; ++c) {
        const double nc = static_cast<double>(s.count[c]);
        const double dm = s.mean[c] - s.grand_mean;
        ssb += nc * dm * dm;
        ssw += nc * s.var[c];
    }
    const double msb = ssb; // two classes: one between-group dof
    const double msw = n > 2 ? ssw / static_cast<double>(n - 2) : ssw;
    return msb / (msw + kFsEpsilon);
}

inline double fisher_score_column(const FeatureTable& t, std::size_t col) {
    const ClassStats s = class_stats(t, col);
    double num = 0.0, den = 0.0;
    for (int c = 0; c < 2; ++c) {
        const double nc = static_cast<double>(s.count[c]);
        const double dm = s.mean[c] - s.grand_mean;
        num += nc * dm * dm;
        den += nc * s.var[c];
    }
    return num / (den + kFsEpsilon);
}

// Deterministic shuffled split into probe train / validation index sets.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> probe_split(
    std::size_t n, double val_fraction, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x7073));
    rng.shuffle(order);
    std::size_t n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_fraction));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    return {std::move(train), std::move(val)};
}

// F-measure on `validation` of a probe trained on `train`, both restricted to
// `cols`. Returns 0 when the train part is single-class. The probe seed is
// deliberately independent of which method proposed the subset, so equal
// subsets earn equal scores.
inline double probe_subset_score(const FeatureTable& train, const FeatureTable& validation,
                                 std::span<const std::size_t> cols, const ProbeConfig& cfg,
                                 std::uint64_t probe_seed) {
    const FeatureTable sub_train = select_columns(train, cols);
    const FeatureTable sub_val = select_columns(validation, cols);
    bool saw[2] = {false, false};
    for (int y : *sub_train.labels) saw[y] = true;
    if (!saw[0] || !saw[1]) return 0.0;
    MlpModel probe(cols.size(), cfg.hidden, cfg.learning_rate, probe_seed);
    mlp_fit(probe, sub_train, cfg.epochs, probe_seed);
    const std::vector<int> pred = mlp_predict_all(probe, sub_val);
    return evaluate(pred, *sub_val.labels).f_measure;
}

} // namespace detail

/// Per-column relevance scores, higher = better. The filter methods (chi2,
/// fisher, anova) score columns independently; the wrapper methods (rfe,
/// backward) run a full elimination and report the elimination order as the
/// score, so the last surviving column scores highest.
inline std::vector<double> fs_scores(const FeatureTable& table, FsMethod method,
                                     std::uint64_t seed = 0, const ProbeConfig& probe = {}) {
    table.validate();
    if (table.n_rows() < 10) throw insufficient_data_error("feature scoring needs at least 10 rows");
    detail::require_two_classes(table, "feature scoring");
    const std::size_t d = table.n_cols();
    std::vector<double> scores(d, 0.0);

    switch (method) {
        case FsMethod::chi2:
            for (std::size_t j = 0; j < d; ++j) scores[j] = detail::chi2_score_column(table, j);
            return scores;
        case FsMethod::anova:
            for (std::size_t j = 0; j < d; ++j) scores[j] = detail::anova_score_column(table, j);
            return scores;
        case FsMethod::fisher:
            for (std::size_t j = 0; j < d; ++j) scores[j] = detail::fisher_score_column(table, j);
            return scores;
        case FsMethod::rfe: {
            std::vector<std::size_t> remaining(d);
            std::iota(remaining.begin(), remaining.end(), std::size_t{0});
            double order = 0.0;
            while (remaining.size() > 1) {
                const SvmModel model = svm_train(select_columns(table, remaining));
                std::size_t worst = 0;
                for (std::size_t j = 1; j < remaining.size(); ++j)
                    if (std::abs(model.weights[j]) < std::abs(model.weights[worst])) worst = j;
                scores[remaining[worst]] = order;
                order += 1.0;
                remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(worst));
            }
            scores[remaining[0]] = order;
            return scores;
        }
        case FsMethod::backward: {
            auto [train_idx, val_idx] =
                detail::probe_split(table.n_rows(), probe.validation_fraction, seed);
            const FeatureTable probe_train = take_rows(table, train_idx);
            const FeatureTable probe_val = take_rows(table, val_idx);
            std::vector<std::size_t> remaining(d);
            std::iota(remaining.begin(), remaining.end(), std::size_t{0});
            double order = 0.0;
            std::size_t round = 0;
            while (remaining.size() > 1) {
                // drop the column whose removal hurts the probe the least
                std::size_t best_drop = 0;
                double best_score = -1.0;
                for (std::size_t j = 0; j < remaining.size(); ++j) {
                    std::vector<std::size_t> candidate = remaining;
                    candidate.erase(candidate.begin() + static_cast<std::ptrdiff_t>(j));
                    const std::uint64_t probe_seed =
                        derive_seed(seed, 0x6277, round * 1024 + remaining[j]);
                    const double s = detail::probe_subset_score(probe_train, probe_val, candidate,
                                                                probe, probe_seed);
                    if (s > best_score) {
                        best_score = s;
                        best_drop = j;
                    }
                }
                scores[remaining[best_drop]] = order;
                order += 1.0;
                remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_drop));
                ++round;
            }
            scores[remaining[0]] = order;
            return scores;
        }
    }
    throw invalid_parameter_error("unknown feature selection method");
}

/// Scores plus the top-k column set; score ties break toward the lower
/// column index. For the wrapper methods top-k equals the last k survivors.
inline FsResult fs_score(const FeatureTable& table, FsMethod method, std::size_t k,
                         std::uint64_t seed = 0, const ProbeConfig& probe = {}) {
    if (k == 0 || k > table.n_cols())
        throw invalid_parameter_error("feature selection: k must be in [1, n_cols]");
    FsResult out;
    out.method = method;
    out.scores = fs_scores(table, method, seed, probe);
    std::vector<std::size_t> idx(table.n_cols());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (out.scores[a] != out.scores[b]) return out.scores[a] > out.scores[b];
        return a < b;
    });
    out.selected.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.selected.begin(), out.selected.end());
    return out;
}

inline std::size_t autofs_default_k(std::size_t d) {
    const std::size_t half_up = (d + 1) / 2;
    return std::min(d, std::max<std::size_t>(4, half_up));
}

struct AutoFsCandidate {
    FsMethod method{};
    FsResult result;
    double validation_f_measure = 0.0;
};

struct AutoFsReport {
    std::vector<AutoFsCandidate> candidates; // canonical method order
    FsMethod chosen{};
    std::vector<std::size_t> selected;
    double best_f_measure = 0.0;
};

/// Runs every selection method at the same k on the train table, trains one
/// probe per proposed subset, and keeps the method whose probe scores highest
/// on the validation table. Equal scores fall back to the method order rfe,
/// backward, chi2, fisher, anova.
inline AutoFsReport autofs_select(const FeatureTable& train, const FeatureTable& validation,
                                  std::size_t k = 0, std::uint64_t seed = 0,
                                  const ProbeConfig& probe = {}) {
    train.validate();
    validation.validate();
    if (train.column_names != validation.column_names)
        throw dimension_mismatch_error("autofs: train/validation column mismatch");
    detail::require_two_classes(train, "autofs train");
    detail::require_two_classes(validation, "autofs validation");
    if (k == 0) k = autofs_default_k(train.n_cols());
    if (k > train.n_cols()) throw invalid_parameter_error("autofs: k exceeds column count");

    AutoFsReport report;
    bool have_best = false;
    for (FsMethod m : kAllFsMethods) {
        AutoFsCandidate cand;
        cand.method = m;
        cand.result = fs_score(train, m, k, seed, probe);
        cand.validation_f_measure = detail::probe_subset_score(
            train, validation, cand.result.selected, probe, derive_seed(seed, 0x6166));
        if (!have_best || cand.validation_f_measure > report.best_f_measure) {
            report.best_f_measure = cand.validation_f_measure;
            report.chosen = m;
            report.selected = cand.result.selected;
            have_best = true;
        }
        report.candidates.push_back(std::move(cand));
    }
    return report;
}

} // namespace vtwin
