#include "roughcast/augment.hpp"
#include "roughcast/error.hpp"
#include "roughcast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roughcast::aug {

using nlohmann::json;

double ks_statistic(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty()) {
        fail(Errc::insufficient_data, "KS statistic needs two non-empty samples");
    }
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    // Step through pooled values; both ECDFs are evaluated after consuming ties.
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) {
            ++i;
        }
        while (j < y.size() && y[j] == v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

namespace {

double population_or_sample_std(std::span<const double> v)
{
    return v.size() >= 2 ? data::sample_std(v) : 0.0;
}

} // namespace

AugmentationDiagnostics diagnostics(std::span<const double> real_ra, std::span<const double> synthetic_ra,
                                    std::size_t bins)
{
    if (bins == 0) {
        fail(Errc::config, "histogram needs at least one bin");
    }
    AugmentationDiagnostics d;
    d.ks = ks_statistic(real_ra, synthetic_ra);
    d.real_mean = data::mean(real_ra);
    d.synthetic_mean = data::mean(synthetic_ra);
    d.real_std = population_or_sample_std(real_ra);
    d.synthetic_std = population_or_sample_std(synthetic_ra);
    d.mean_delta = d.synthetic_mean - d.real_mean;
    d.std_delta = d.synthetic_std - d.real_std;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto span : {real_ra, synthetic_ra}) {
        for (double v : span) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi == lo) {
        hi = lo + 1.0;
    }
    auto& h = d.histogram;
    h.edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) {
        h.edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
    }
    auto fill = [&](std::span<const double> values, std::vector<std::size_t>& counts) {
        counts.assign(bins, 0);
        for (double v : values) {
            auto k = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
            ++counts[std::min(k, bins - 1)];
        }
    };
    fill(real_ra, h.real);
    fill(synthetic_ra, h.synthetic);
    return d;
}

AugmentationDiagnostics diagnostics(std::span<const double> real_ra, const std::vector<SyntheticRecord>& synthetic,
                                    const Matrix& real_conditions, const std::vector<std::string>& feature_order,
                                    std::size_t bins)
{
    std::vector<double> synth_ra;
    std::size_t clipped = 0;
    for (const auto& rec : synthetic) {
        synth_ra.push_back(rec.ra);
        clipped += rec.pre_clip_out_of_range;
    }
    auto d = diagnostics(real_ra, synth_ra, bins);
    d.clip_fraction = static_cast<double>(clipped) / static_cast<double>(synthetic.size());

    const std::size_t width = real_conditions.cols();
    for (std::size_t f = 0; f < width; ++f) {
        FeatureCoverage c;
        c.feature = f < feature_order.size() ? feature_order[f] : "x" + std::to_string(f);
        const auto real_col = real_conditions.column(f);
        c.real_min = *std::min_element(real_col.begin(), real_col.end());
        c.real_max = *std::max_element(real_col.begin(), real_col.end());
        c.real_mean = data::mean(real_col);
        c.synthetic_min = std::numeric_limits<double>::infinity();
        c.synthetic_max = -c.synthetic_min;
        double sum = 0.0;
        for (const auto& rec : synthetic) {
            if (rec.conditions.size() != width) {
                fail(Errc::contract, "synthetic condition width does not match the real conditions");
            }
            c.synthetic_min = std::min(c.synthetic_min, rec.conditions[f]);
            c.synthetic_max = std::max(c.synthetic_max, rec.conditions[f]);
            sum += rec.conditions[f];
        }
        c.synthetic_mean = sum / static_cast<double>(synthetic.size());
        d.coverage.push_back(std::move(c));
    }
    return d;
}

json to_json(const AugmentationDiagnostics& d)
{
    json coverage = json::array();
    for (const auto& c : d.coverage) {
        coverage.push_back({
            {"feature", c.feature},
            {"real_min", c.real_min},
            {"real_max", c.real_max},
            {"real_mean", c.real_mean},
            {"synthetic_min", c.synthetic_min},
            {"synthetic_max", c.synthetic_max},
            {"synthetic_mean", c.synthetic_mean},
        });
    }
    return {
        {"ks", d.ks},
        {"real_mean", d.real_mean},
        {"synthetic_mean", d.synthetic_mean},
        {"real_std", d.real_std},
        {"synthetic_std", d.synthetic_std},
        {"mean_delta", d.mean_delta},
        {"std_delta", d.std_delta},
        {"clip_fraction", d.clip_fraction},
        {"coverage", std::move(coverage)},
        {"histogram",
         {{"edges", d.histogram.edges}, {"real", d.histogram.real}, {"synthetic", d.histogram.synthetic}}},
    };
}

} // namespace roughcast::aug
