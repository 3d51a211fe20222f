#include "roughcast/scaler.hpp"

#include "roughcast/error.hpp"

#include <algorithm>
#include <string>

namespace roughcast::data {

std::vector<std::size_t> ScalerParams::constant_features() const
{
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < width(); ++f) {
        if (is_constant(f)) {
            out.push_back(f);
        }
    }
    return out;
}

ScalerParams ScalerParams::identity(std::size_t width)
{
    ScalerParams p;
    p.min.assign(width, 0.0);
    p.max.assign(width, 1.0);
    p.target_min = 0.0;
    p.target_max = 1.0;
    return p;
}

ScalerParams fit_scaler(const Matrix& train_rows)
{
    if (train_rows.rows() == 0) {
        fail(Errc::insufficient_data, "cannot fit a scaler on an empty subset");
    }
    ScalerParams p;
    p.min.assign(train_rows.cols(), 0.0);
    p.max.assign(train_rows.cols(), 0.0);
    for (std::size_t c = 0; c < train_rows.cols(); ++c) {
        double lo = train_rows(0, c);
        double hi = lo;
        for (std::size_t r = 1; r < train_rows.rows(); ++r) {
            lo = std::min(lo, train_rows(r, c));
            hi = std::max(hi, train_rows(r, c));
        }
        p.min[c] = lo;
        p.max[c] = hi;
    }
    return p;
}

ScalerParams fit_scaler(const Matrix& train_rows, std::span<const double> train_targets)
{
    if (train_targets.size() != train_rows.rows()) {
        fail(Errc::schema, "target count does not match row count");
    }
    ScalerParams p = fit_scaler(train_rows);
    const auto [lo, hi] = std::minmax_element(train_targets.begin(), train_targets.end());
    p.target_min = *lo;
    p.target_max = *hi;
    return p;
}

double scale_value(const ScalerParams& params, std::size_t f, double value)
{
    if (params.is_constant(f)) {
        return 0.5;
    }
    return (value - params.min[f]) / (params.max[f] - params.min[f]);
}

double unscale_value(const ScalerParams& params, std::size_t f, double scaled)
{
    if (params.is_constant(f)) {
        return params.min[f];
    }
    return params.min[f] + scaled * (params.max[f] - params.min[f]);
}

static void check_width(const ScalerParams& params, const Matrix& rows)
{
    if (rows.cols() != params.width()) {
        fail(Errc::schema, "row width " + std::to_string(rows.cols()) + " does not match scaler width " +
                               std::to_string(params.width()));
    }
}

Matrix apply_scaler(const ScalerParams& params, const Matrix& rows)
{
    check_width(params, rows);
    Matrix out(rows.rows(), rows.cols());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        for (std::size_t c = 0; c < rows.cols(); ++c) {
            out(r, c) = scale_value(params, c, rows(r, c));
        }
    }
    return out;
}

Matrix invert_scaler(const ScalerParams& params, const Matrix& scaled)
{
    check_width(params, scaled);
    Matrix out(scaled.rows(), scaled.cols());
    for (std::size_t r = 0; r < scaled.rows(); ++r) {
        for (std::size_t c = 0; c < scaled.cols(); ++c) {
            out(r, c) = unscale_value(params, c, scaled(r, c));
        }
    }
    return out;
}

std::vector<bool> extrapolated_rows(const ScalerParams& params, const Matrix& rows)
{
    check_width(params, rows);
    std::vector<bool> out(rows.rows(), false);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        for (std::size_t c = 0; c < rows.cols(); ++c) {
            if (rows(r, c) < params.min[c] || rows(r, c) > params.max[c]) {
                out[r] = true;
                break;
            }
        }
    }
    return out;
}

double scale_target(const ScalerParams& params, double value)
{
    if (!params.has_target()) {
        return value;
    }
    if (*params.target_min == *params.target_max) {
        return 0.5;
    }
    return (value - *params.target_min) / (*params.target_max - *params.target_min);
}

double unscale_target(const ScalerParams& params, double scaled)
{
    if (!params.has_target()) {
        return scaled;
    }
    if (*params.target_min == *params.target_max) {
        return *params.target_min;
    }
    return *params.target_min + scaled * (*params.target_max - *params.target_min);
}

} // namespace roughcast::data
