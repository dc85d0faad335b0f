#pragma once

#include <cmath>
#include <limits>

#include "vtwin/errors.hpp"

namespace vtwin {

/// Parameters of an RSU channel system modelled as an M/M/m FIFO queue.
/// `lambda_r` is the arrival rate of communication requests, `mu` the
/// per-channel service rate, `m` the number of channels.
struct QueueParams {
    double lambda_r = 0.0;
    double mu = 0.0;
    int m = 0;
};

/// Steady-state quantities of the channel system.
struct QueueMetrics {
    double rho = 0.0;     // per-channel utilization
    double p0 = 0.0;      // probability of an empty system
    double p_wait = 0.0;  // probability an arrival has to queue (Erlang C)
    double n_q = 0.0;     // mean number waiting
    double t_q = 0.0;     // mean wait in queue
    double t_total = 0.0; // mean time in system
    double n_r = 0.0;     // mean number in system
};

namespace detail {

// Direct factorial arithmetic is exact enough below this channel count;
// larger systems go through log-space to avoid overflow of (m*rho)^m / m!.
inline constexpr int kLogSpaceThreshold = 20;

inline void check_params(const QueueParams& p) {
    if (!(p.lambda_r > 0.0) || !std::isfinite(p.lambda_r))
        throw invalid_parameter_error("queueing: arrival rate must be positive and finite");
    if (!(p.mu > 0.0) || !std::isfinite(p.mu))
        throw invalid_parameter_error("queueing: service rate must be positive and finite");
    if (p.m < 1)
        throw invalid_parameter_error("queueing: channel count must be at least 1");
}

inline double checked_rho(const QueueParams& p) {
    check_params(p);
    const double rho = p.lambda_r / (static_cast<double>(p.m) * p.mu);
    // Margin keeps 1/(1-rho) away from blow-up.
    if (rho > 1.0 - 1e-9)
        throw unstable_system_error("queueing: offered load meets capacity (rho >= 1 - 1e-9)");
    return rho;
}

inline double log_sum_exp(double log_a, double log_b) {
    if (log_a == -std::numeric_limits<double>::infinity()) return log_b;
    if (log_b == -std::numeric_limits<double>::infinity()) return log_a;
    const double hi = log_a > log_b ? log_a : log_b;
    const double lo = log_a > log_b ? log_b : log_a;
    return hi + std::log1p(std::exp(lo - hi));
}

// log of the normalization bracket: sum_{k=0}^{m-1} a^k/k! + a^m/(m!(1-rho)),
// with a = m*rho.
inline double log_p0_bracket(double rho, int m) {
    const double a = static_cast<double>(m) * rho;
    if (m <= kLogSpaceThreshold) {
        double sum = 0.0;
        double term = 1.0; // a^k / k!
        for (int k = 0; k < m; ++k) {
            sum += term;
            term *= a / static_cast<double>(k + 1);
        }
        // term now holds a^m / m!
        sum += term / (1.0 - rho);
        return std::log(sum);
    }
    const double log_a = std::log(a);
    double acc = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k)
        acc = log_sum_exp(acc, static_cast<double>(k) * log_a - std::lgamma(k + 1.0));
    const double log_tail =
        static_cast<double>(m) * log_a - std::lgamma(m + 1.0) - std::log1p(-rho);
    return log_sum_exp(acc, log_tail);
}

} // namespace detail

/// Per-channel utilization lambda_r / (m * mu), strictly inside (0, 1).
inline double utilization(const QueueParams& p) {
    return detail::checked_rho(p);
}

/// Probability of the empty-system state.
inline double p_zero(const QueueParams& p) {
    const double rho = detail::checked_rho(p);
    return std::exp(-detail::log_p0_bracket(rho, p.m));
}

/// Probability of exactly n requests in the system.
inline double state_probability(const QueueParams& p, int n) {
    if (n < 0)
        throw invalid_parameter_error("queueing: state index must be non-negative");
    const double rho = detail::checked_rho(p);
    const int m = p.m;
    const double log_p0 = -detail::log_p0_bracket(rho, m);
    const double log_a = std::log(static_cast<double>(m) * rho);
    double log_pn;
    if (n <= m) {
        log_pn = log_p0 + static_cast<double>(n) * log_a - std::lgamma(n + 1.0);
    } else {
        log_pn = log_p0 + static_cast<double>(m) * std::log(static_cast<double>(m)) +
                 static_cast<double>(n) * std::log(rho) - std::lgamma(m + 1.0);
    }
    return std::exp(log_pn);
}

/// Erlang C: probability an arriving request finds all channels busy.
inline double prob_wait(const QueueParams& p) {
    const double rho = detail::checked_rho(p);
    const int m = p.m;
    const double log_tail = static_cast<double>(m) * std::log(static_cast<double>(m) * rho) -
                            std::lgamma(m + 1.0) - std::log1p(-rho);
    double pw = std::exp(log_tail - detail::log_p0_bracket(rho, m));
    return pw > 1.0 ? 1.0 : pw;
}

/// All steady-state metrics at once. t_total = t_q + 1/mu and
/// n_r = m*rho + n_q hold exactly; Little's law follows by construction.
inline QueueMetrics analyze(const QueueParams& p) {
    QueueMetrics qm;
    qm.rho = detail::checked_rho(p);
    qm.p0 = p_zero(p);
    qm.p_wait = prob_wait(p);
    qm.n_q = qm.p_wait * qm.rho / (1.0 - qm.rho);
    qm.t_q = qm.n_q / p.lambda_r;
    qm.t_total = qm.t_q + 1.0 / p.mu;
    qm.n_r = static_cast<double>(p.m) * qm.rho + qm.n_q;
    return qm;
}

} // namespace vtwin
