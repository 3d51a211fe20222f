#pragma once

#include <optional>
#include <span>

namespace roughcast::nn {

// Regression metrics in target units. r2 and mape are optional so that the
// lenient path can report degenerate folds (constant targets) without failing.
struct MetricsReport {
    double mae = 0.0;
    double mse = 0.0;
    std::optional<double> r2;
    std::optional<double> mape; // percent

    bool operator==(const MetricsReport&) const = default;
};

enum class MetricsPolicy {
    strict,  // undefined R^2 / MAPE throw Errc::undefined_metric
    lenient, // undefined R^2 / MAPE are left empty
};

MetricsReport compute_metrics(std::span<const double> y_true, std::span<const double> y_pred,
                              MetricsPolicy policy = MetricsPolicy::strict);

double mean_absolute_error(std::span<const double> y_true, std::span<const double> y_pred);

} // namespace roughcast::nn
