#pragma once

#include <span>
#include <vector>

namespace roughcast::data {

// Summary of one numeric column.
//
// Quartiles interpolate linearly between order statistics: the p-quantile of
// sorted x[0..n-1] sits at fractional position h = (n-1)p, i.e.
// x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]). The median of an
// even-length sample is therefore the midpoint of the two central values.
//
// `std` uses the n-1 denominator. `skewness` is the adjusted Fisher-Pearson
// coefficient G1 = g1 * sqrt(n(n-1)) / (n-2), g1 = m3 / m2^(3/2).
struct DescriptiveStats {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double skewness = 0.0;
};

// Requires >= 3 values with non-zero spread (skewness is undefined otherwise);
// throws Errc::insufficient_data.
DescriptiveStats descriptive_stats(std::span<const double> values);

// Linear-interpolation quantile on an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double p);

double mean(std::span<const double> values);
double sample_std(std::span<const double> values);

} // namespace roughcast::data
