#include "roughcast/stats.hpp"

#include "roughcast/error.hpp"

#include <algorithm>
#include <cmath>

namespace roughcast::data {

double mean(std::span<const double> values)
{
    if (values.empty()) {
        fail(Errc::insufficient_data, "mean of empty sample");
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values)
{
    if (values.size() < 2) {
        fail(Errc::insufficient_data, "standard deviation needs at least 2 values");
    }
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) {
        ss += (v - m) * (v - m);
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double sorted_quantile(std::span<const double> sorted, double p)
{
    if (sorted.empty()) {
        fail(Errc::insufficient_data, "quantile of empty sample");
    }
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

DescriptiveStats descriptive_stats(std::span<const double> values)
{
    const std::size_t n = values.size();
    if (n < 3) {
        fail(Errc::insufficient_data, "descriptive statistics need at least 3 values, got " + std::to_string(n));
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            fail(Errc::validation, "non-finite value in sample");
        }
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    DescriptiveStats s;
    s.count = n;
    s.mean = mean(values);
    double m2 = 0.0;
    double m3 = 0.0;
    for (double v : values) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    s.std = std::sqrt(m2 / static_cast<double>(n - 1));
    s.min = sorted.front();
    s.max = sorted.back();
    s.q1 = sorted_quantile(sorted, 0.25);
    s.median = sorted_quantile(sorted, 0.5);
    s.q3 = sorted_quantile(sorted, 0.75);

    const double dn = static_cast<double>(n);
    m2 /= dn;
    m3 /= dn;
    if (m2 == 0.0) {
        fail(Errc::insufficient_data, "skewness undefined for a constant sample");
    }
    const double g1 = m3 / std::pow(m2, 1.5);
    s.skewness = g1 * std::sqrt(dn * (dn - 1.0)) / (dn - 2.0);
    return s;
}

} // namespace roughcast::data
