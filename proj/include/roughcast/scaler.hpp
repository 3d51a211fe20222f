#pragma once

#include "roughcast/matrix.hpp"

#include <optional>
#include <span>
#include <vector>

namespace roughcast::data {

// Min-max scaling parameters fitted on a training subset only.
struct ScalerParams {
    std::vector<double> min;
    std::vector<double> max;
    std::optional<double> target_min;
    std::optional<double> target_max;

    std::size_t width() const { return min.size(); }
    bool is_constant(std::size_t feature) const { return min[feature] == max[feature]; }
    // Features whose training column was constant (mapped to 0.5).
    std::vector<std::size_t> constant_features() const;
    bool has_target() const { return target_min.has_value() && target_max.has_value(); }

    // min = 0, max = 1 for every feature and the target: apply is a no-op.
    static ScalerParams identity(std::size_t width);

    bool operator==(const ScalerParams&) const = default;
};

ScalerParams fit_scaler(const Matrix& train_rows);
ScalerParams fit_scaler(const Matrix& train_rows, std::span<const double> train_targets);

// Linear map; values outside the fitted range extrapolate outside [0, 1].
Matrix apply_scaler(const ScalerParams& params, const Matrix& rows);
Matrix invert_scaler(const ScalerParams& params, const Matrix& scaled);

double scale_value(const ScalerParams& params, std::size_t feature, double value);
double unscale_value(const ScalerParams& params, std::size_t feature, double scaled);

// Per row: true when any feature falls outside the fitted [min, max].
std::vector<bool> extrapolated_rows(const ScalerParams& params, const Matrix& rows);

double scale_target(const ScalerParams& params, double value);
double unscale_target(const ScalerParams& params, double scaled);

} // namespace roughcast::data
