#include "roughcast/nn/metrics.hpp"

#include "roughcast/error.hpp"

#include <cmath>

namespace roughcast::nn {

static void check_lengths(std::span<const double> y_true, std::span<const double> y_pred)
{
    if (y_true.size() != y_pred.size() || y_true.empty()) {
        fail(Errc::schema, "metrics need equal, non-zero lengths");
    }
}

double mean_absolute_error(std::span<const double> y_true, std::span<const double> y_pred)
{
    check_lengths(y_true, y_pred);
    double sum = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        sum += std::abs(y_true[i] - y_pred[i]);
    }
    return sum / static_cast<double>(y_true.size());
}

MetricsReport compute_metrics(std::span<const double> y_true, std::span<const double> y_pred, MetricsPolicy policy)
{
    check_lengths(y_true, y_pred);
    const double n = static_cast<double>(y_true.size());
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double mean_true = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double e = y_pred[i] - y_true[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        mean_true += y_true[i];
    }
    mean_true /= n;

    MetricsReport report;
    report.mae = abs_sum / n;
    report.mse = sq_sum / n;

    double ss_tot = 0.0;
    for (double y : y_true) {
        ss_tot += (y - mean_true) * (y - mean_true);
    }
    if (ss_tot > 0.0) {
        report.r2 = 1.0 - sq_sum / ss_tot;
    } else if (policy == MetricsPolicy::strict) {
        fail(Errc::undefined_metric, "R^2 undefined: target variance is zero");
    }

    bool mape_defined = true;
    double ape = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (std::abs(y_true[i]) <= 1e-9) {
            mape_defined = false;
            break;
        }
        ape += std::abs((y_pred[i] - y_true[i]) / y_true[i]);
    }
    if (mape_defined) {
        report.mape = 100.0 * ape / n;
    } else if (policy == MetricsPolicy::strict) {
        fail(Errc::undefined_metric, "MAPE undefined: a target is within 1e-9 of zero");
    }
    return report;
}

} // namespace roughcast::nn
