#include "roughcast/augment.hpp"
#include "roughcast/error.hpp"

#include <algorithm>
#include <cmath>

namespace roughcast::aug {

ConditionSample sample_conditions(const Matrix& normalized_train, std::size_t n, double sigma, std::uint64_t seed)
{
    if (normalized_train.rows() == 0) {
        fail(Errc::empty_dataset, "cannot sample conditions from an empty training subset");
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        fail(Errc::config, "sigma must be finite and >= 0");
    }
    Rng rng(seed);
    const std::size_t d = normalized_train.cols();
    ConditionSample out{Matrix(n, d), std::vector<std::size_t>(n), 0.0};
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = rng.below(normalized_train.rows());
        out.source[i] = src;
        const auto base = normalized_train.row(src);
        auto row = out.conditions.row(i);
        for (std::size_t f = 0; f < d; ++f) {
            // sigma == 0 keeps the row bit-identical (no draw, no rounding).
            const double noise = sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0;
            abs_sum += std::abs(noise);
            row[f] = std::clamp(base[f] + noise, 0.0, 1.0);
        }
    }
    if (n > 0 && d > 0) {
        out.mean_abs_perturbation = abs_sum / static_cast<double>(n * d);
    }
    return out;
}

} // namespace roughcast::aug
