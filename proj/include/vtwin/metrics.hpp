#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "vtwin/errors.hpp"

namespace vtwin {

/// Confusion counts and derived detection metrics. Attack is the positive
/// class; any metric with a zero denominator is reported as 0.
struct DetectionReport {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0.0;
    double f_measure = 0.0;
    double sensitivity = 0.0;
    double detection_rate = 0.0; // alias of sensitivity

    static DetectionReport from_counts(std::size_t tp, std::size_t fp, std::size_t tn,
                                       std::size_t fn) {
        DetectionReport r;
        r.tp = tp;
        r.fp = fp;
        r.tn = tn;
        r.fn = fn;
        r.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        r.sensitivity = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        r.f_measure = (r.precision + r.sensitivity > 0.0)
                          ? 2.0 * r.precision * r.sensitivity / (r.precision + r.sensitivity)
                          : 0.0;
        r.detection_rate = r.sensitivity;
        return r;
    }
};

inline DetectionReport evaluate(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size())
        throw dimension_mismatch_error("evaluate: prediction/truth length mismatch");
    if (predicted.empty()) throw empty_input_error("evaluate: empty label vectors");
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (truth[i] == 1)
            (predicted[i] == 1 ? tp : fn)++;
        else
            (predicted[i] == 1 ? fp : tn)++;
    }
    return DetectionReport::from_counts(tp, fp, tn, fn);
}

} // namespace vtwin
