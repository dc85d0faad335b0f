// Prints the analytical waiting metrics over an arrival-rate sweep, then
// cross-checks one point against a simulated run.

#include <cstdio>

#include "vtwin/queueing.hpp"
#include "vtwin/sim.hpp"

int main() {
    const double mu = 1.0;
    const int m = 4;
    std::printf("%8s %8s %8s %8s %8s %8s\n", "lambda", "rho", "p_wait", "n_q", "t_q", "t_total");
    for (double lambda = 0.5; lambda < 4.0; lambda += 0.5) {
        const vtwin::QueueMetrics qm = vtwin::analyze({lambda, mu, m});
        std::printf("%8.2f %8.4f %8.4f %8.4f %8.4f %8.4f\n", lambda, qm.rho, qm.p_wait, qm.n_q,
                    qm.t_q, qm.t_total);
    }

    vtwin::Scenario s;
    s.params = {2.4, mu, m};
    s.duration = 50000.0;
    s.seed = 7;
    s.feature_window = s.duration;
    const vtwin::TraceLog trace = vtwin::run(s);
    const vtwin::EmpiricalMetrics em = vtwin::empirical_metrics(trace);
    const vtwin::QueueMetrics qm = vtwin::analyze(s.params);
    std::printf("\nlambda=2.4: model t_q=%.4f sim t_q=%.4f | model n_q=%.4f sim n_q=%.4f "
                "(%zu completions)\n",
                qm.t_q, em.mean_wait, qm.n_q, em.mean_queue_len, em.completed);
    return 0;
}
