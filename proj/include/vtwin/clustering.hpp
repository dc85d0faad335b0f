#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vtwin/errors.hpp"
#include "vtwin/features.hpp"
#include "vtwin/rng.hpp"

namespace vtwin {

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// One two-means run with k-means++ style seeding, 100 iteration cap,
// tolerance 1e-6 on center movement. Returns hard assignments.
inline std::vector<int> two_means_once(const FeatureTable& t, std::uint64_t seed) {
    const std::size_t n = t.n_rows(), d = t.n_cols();
    Rng rng(seed);
    std::vector<std::vector<double>> centers(2);
    const std::size_t first = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    centers[0] = t.rows[first];
    // D^2 sampling for the second center
    {
        std::vector<double> d2(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = sq_dist(t.rows[i], centers[0]);
            total += d2[i];
        }
        if (total <= 0.0) {
            centers[1] = t.rows[(first + 1) % n]; // all points identical
        } else {
            double target = rng.uniform01() * total;
            std::size_t pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                target -= d2[i];
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
            }
            centers[1] = t.rows[pick];
        }
    }

    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        for (std::size_t i = 0; i < n; ++i)
            assign[i] = sq_dist(t.rows[i], centers[0]) <= sq_dist(t.rows[i], centers[1]) ? 0 : 1;
        std::vector<std::vector<double>> next(2, std::vector<double>(d, 0.0));
        std::size_t counts[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assign[i]];
            for (std::size_t j = 0; j < d; ++j) next[assign[i]][j] += t.rows[i][j];
        }
        for (int c = 0; c < 2; ++c) {
            if (counts[c] == 0) {
                next[c] = centers[c]; // keep the empty center in place
                continue;
            }
            for (std::size_t j = 0; j < d; ++j) next[c][j] /= static_cast<double>(counts[c]);
        }
        double moved = 0.0;
        for (int c = 0; c < 2; ++c) moved += sq_dist(next[c], centers[c]);
        centers = std::move(next);
        if (std::sqrt(moved) < 1e-6) break;
    }
    return assign;
}

// Within-cluster sum of squares of a two-way partition.
inline double partition_cost(const FeatureTable& t, const std::vector<int>& assign) {
    const std::size_t n = t.n_rows(), d = t.n_cols();
    std::vector<std::vector<double>> centers(2, std::vector<double>(d, 0.0));
    std::size_t counts[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        ++counts[assign[i]];
        for (std::size_t j = 0; j < d; ++j) centers[assign[i]][j] += t.rows[i][j];
    }
    for (int c = 0; c < 2; ++c)
        if (counts[c])
            for (std::size_t j = 0; j < d; ++j) centers[c][j] /= static_cast<double>(counts[c]);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += sq_dist(t.rows[i], centers[assign[i]]);
    return ss;
}

// A single k-means++ draw occasionally locks onto a tiny outlier group
// instead of the dominant modes; a handful of seeded restarts scored by
// within-cluster sum of squares makes the partition reliable while staying
// deterministic.
inline std::vector<int> two_means(const FeatureTable& t, std::uint64_t seed) {
    constexpr int kRestarts = 8;
    std::vector<int> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int r = 0; r < kRestarts; ++r) {
        std::vector<int> assign = two_means_once(t, derive_seed(seed, 0x4b4d, r));
        const double cost = partition_cost(t, assign);
        if (cost < best_cost) {
            best_cost = cost;
            best = std::move(assign);
        }
    }
    return best;
}

struct GmmComponent {
    double weight = 0.5;
    std::vector<double> mean;
    std::vector<double> var; // diagonal covariance
};

} // namespace detail

/// Unsupervised labelling of standardized feature rows: a two-means partition
/// seeds a two-component diagonal-covariance Gaussian mixture, EM refines the
/// responsibilities, and rows are hard-assigned to the likelier component.
/// The smaller cluster becomes the attack class; an exact size tie goes to
/// the cluster with the higher mean of the `arrival_count` column (first
/// column when absent).
inline std::vector<int> label_unsupervised(const FeatureTable& table, std::uint64_t seed = 0) {
    table.validate();
    const std::size_t n = table.n_rows(), d = table.n_cols();
    if (n < 10) throw insufficient_data_error("unsupervised labelling needs at least 10 rows");

    std::vector<int> assign = detail::two_means(table, seed);

    // mixture init from the partition
    detail::GmmComponent comp[2];
    {
        std::size_t counts[2] = {0, 0};
        for (int a : assign) ++counts[a];
        for (int c = 0; c < 2; ++c) {
            comp[c].mean.assign(d, 0.0);
            comp[c].var.assign(d, 0.0);
            comp[c].weight = static_cast<double>(counts[c]) / static_cast<double>(n);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) comp[assign[i]].mean[j] += table.rows[i][j];
        for (int c = 0; c < 2; ++c)
            if (counts[c])
                for (std::size_t j = 0; j < d; ++j) comp[c].mean[j] /= static_cast<double>(counts[c]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double dx = table.rows[i][j] - comp[assign[i]].mean[j];
                comp[assign[i]].var[j] += dx * dx;
            }
        for (int c = 0; c < 2; ++c)
            for (std::size_t j = 0; j < d; ++j) {
                comp[c].var[j] = counts[c] ? comp[c].var[j] / static_cast<double>(counts[c]) : 1.0;
                comp[c].var[j] = std::max(comp[c].var[j], 1e-6); // variance floor
            }
    }

    // EM on the diagonal mixture
    std::vector<double> resp(n); // responsibility of component 1
    const auto log_density = [&](const detail::GmmComponent& g, std::span<const double> x) {
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double dx = x[j] - g.mean[j];
            acc += -0.5 * (dx * dx / g.var[j] + std::log(2.0 * 3.14159265358979323846 * g.var[j]));
        }
        return acc;
    };
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 100; ++iter) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double l0 = std::log(std::max(comp[0].weight, 1e-12)) +
                              log_density(comp[0], table.rows[i]);
            const double l1 = std::log(std::max(comp[1].weight, 1e-12)) +
                              log_density(comp[1], table.rows[i]);
            const double mx = std::max(l0, l1);
            const double z = std::exp(l0 - mx) + std::exp(l1 - mx);
            resp[i] = std::exp(l1 - mx) / z;
            ll += mx + std::log(z);
        }
        // M step
        double w1 = 0.0;
        for (double r : resp) w1 += r;
        const double w0 = static_cast<double>(n) - w1;
        for (int c = 0; c < 2; ++c) {
            comp[c].mean.assign(d, 0.0);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                comp[0].mean[j] += (1.0 - resp[i]) * table.rows[i][j];
                comp[1].mean[j] += resp[i] * table.rows[i][j];
            }
        for (std::size_t j = 0; j < d; ++j) {
            comp[0].mean[j] /= std::max(w0, 1e-12);
            comp[1].mean[j] /= std::max(w1, 1e-12);
        }
        for (int c = 0; c < 2; ++c) comp[c].var.assign(d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double d0 = table.rows[i][j] - comp[0].mean[j];
                const double d1 = table.rows[i][j] - comp[1].mean[j];
                comp[0].var[j] += (1.0 - resp[i]) * d0 * d0;
                comp[1].var[j] += resp[i] * d1 * d1;
            }
        for (std::size_t j = 0; j < d; ++j) {
            comp[0].var[j] = std::max(comp[0].var[j] / std::max(w0, 1e-12), 1e-6);
            comp[1].var[j] = std::max(comp[1].var[j] / std::max(w1, 1e-12), 1e-6);
        }
        comp[0].weight = w0 / static_cast<double>(n);
        comp[1].weight = w1 / static_cast<double>(n);
        if (std::abs(ll - prev_ll) < 1e-6 * (1.0 + std::abs(ll))) break;
        prev_ll = ll;
    }

    std::size_t counts[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        assign[i] = resp[i] > 0.5 ? 1 : 0;
        ++counts[assign[i]];
    }
    if (counts[0] < 2 || counts[1] < 2)
        throw degenerate_cluster_error("unsupervised labelling: a component collapsed below 2 members");

    // attack = minority cluster; on a tie, the cluster with the higher mean
    // arrival count
    int attack_cluster;
    if (counts[0] != counts[1]) {
        attack_cluster = counts[0] < counts[1] ? 0 : 1;
    } else {
        std::size_t col = table.has_column("arrival_count") ? table.col_index("arrival_count") : 0;
        double mean0 = 0.0, mean1 = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            (assign[i] == 0 ? mean0 : mean1) += table.rows[i][col];
        mean0 /= static_cast<double>(counts[0]);
        mean1 /= static_cast<double>(counts[1]);
        attack_cluster = mean1 > mean0 ? 1 : 0;
    }

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = assign[i] == attack_cluster ? kAttack : kBenign;
    return labels;
}

} // namespace vtwin
