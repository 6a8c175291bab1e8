#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "stockcast/data_model.hpp"
#include "stockcast/error.hpp"

namespace stockcast {

struct RegressionReport {
    double mse = 0.0;
    double rmse = 0.0;
    // Empty when the actual values are constant (SS_tot = 0).
    std::optional<double> r_squared;
    double msle = 0.0;
    std::size_t n = 0;
};

// MSLE uses ln(1 + x); predictions are clamped to -1 + 1e-9 so the log stays
// defined.
inline RegressionReport regression_report(std::span<const double> predicted,
                                          std::span<const double> actual) {
    detail::require(predicted.size() == actual.size(), "prediction and actual lengths differ");
    detail::require(!actual.empty(), "regression report needs at least one sample");

    const double n = static_cast<double>(actual.size());
    double mean = 0.0;
    for (const double a : actual) {
        detail::require(std::isfinite(a), "non-finite actual value");
        detail::require(a > -1.0, "actual values must exceed -1 for MSLE");
        mean += a;
    }
    mean /= n;

    double ss_res = 0.0;
    double ss_tot = 0.0;
    double sq_log = 0.0;
    for (std::size_t k = 0; k < actual.size(); ++k) {
        detail::require(std::isfinite(predicted[k]), "non-finite prediction");
        const double e = predicted[k] - actual[k];
        ss_res += e * e;
        const double d = actual[k] - mean;
        ss_tot += d * d;
        const double p = std::max(predicted[k], -1.0 + 1e-9);
        const double l = std::log1p(p) - std::log1p(actual[k]);
        sq_log += l * l;
    }

    RegressionReport report;
    report.n = actual.size();
    report.mse = ss_res / n;
    report.rmse = std::sqrt(report.mse);
    if (ss_tot > 0.0) {
        report.r_squared = 1.0 - ss_res / ss_tot;
    }
    report.msle = sq_log / n;
    return report;
}

// Positive class is +1.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const Sentiment> predicted,
                                 std::span<const Sentiment> truth) {
    detail::require(predicted.size() == truth.size(), "prediction and label lengths differ");
    detail::require(!truth.empty(), "confusion matrix needs at least one sample");
    ConfusionMatrix cm;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const int p = to_int(predicted[k]);
        const int t = to_int(truth[k]);
        detail::require((p == 1 || p == -1) && (t == 1 || t == -1), "labels must be +1 or -1");
        if (p == 1) {
            (t == 1 ? cm.tp : cm.fp) += 1;
        } else {
            (t == 1 ? cm.fn : cm.tn) += 1;
        }
    }
    return cm;
}

struct ClassificationReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_degenerate = false;  // tp + fp == 0
    bool recall_degenerate = false;     // tp + fn == 0
};

inline ClassificationReport classification_report(const ConfusionMatrix& cm) {
    detail::require(cm.total() > 0, "classification report of an empty confusion matrix");
    ClassificationReport r;
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    if (cm.tp + cm.fp == 0) {
        r.precision_degenerate = true;
    } else {
        r.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    }
    if (cm.tp + cm.fn == 0) {
        r.recall_degenerate = true;
    } else {
        r.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    }
    if (r.precision + r.recall > 0.0) {
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    }
    return r;
}

} // namespace stockcast
