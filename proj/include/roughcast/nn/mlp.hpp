#pragma once

#include "roughcast/nn/metrics.hpp"
#include "roughcast/nn/network.hpp"
#include "roughcast/scaler.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace roughcast::nn {

struct MlpConfig {
    std::vector<std::size_t> hidden_widths{64, 32};
    Activation activation = Activation::relu;
    double dropout_rate = 0.1;
    double learning_rate = 1e-3;
    double l2_strength = 1e-5;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 500;
    std::size_t early_stop_patience = 30;
    double grad_clip_norm = 1.0;
    std::uint64_t seed = 42;

    double plateau_factor = 0.5;
    std::size_t plateau_patience = 10;
    double min_learning_rate = 1e-5;
    double bn_momentum = 0.1;
    // Fit a min-max scaler on the training targets and regress in [0, 1].
    bool scale_target = true;

    // Throws Errc::config on any out-of-range field.
    void validate() const;

    bool operator==(const MlpConfig&) const = default;
};

struct TrainMetadata {
    MlpConfig config;
    std::size_t epochs_run = 0;
    std::optional<double> best_val_mae;
    std::optional<MetricsReport> test_metrics;
    std::size_t train_rows = 0;
};

// A predictor in physical units: raw feature rows in canonical order go
// through the scaler, the network, and the inverse target map.
struct MlpModel {
    Network network;
    data::ScalerParams scaler;
    std::vector<std::string> feature_order;
    TrainMetadata metadata;

    std::size_t input_dim() const { return network.input_dim(); }

    // Eval-mode prediction; pure function of (model, rows).
    std::vector<double> predict(const Matrix& raw_rows) const;
};

// Hidden widths from config, identity scaler, canonical feature order when
// input_dim is 8 (generic x0..xn names otherwise).
MlpModel init_mlp(const MlpConfig& config, std::size_t input_dim);

// Wraps an arbitrary network (e.g. hand-set or linear) as a model.
MlpModel wrap_network(Network network, data::ScalerParams scaler, std::vector<std::string> feature_order = {});

std::vector<double> forward(const MlpModel& model, const Matrix& raw_rows, Mode mode, Rng* dropout_rng = nullptr);

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_mae;
    std::vector<double> learning_rate;
    std::size_t stopping_epoch = 0; // 1-based, last epoch that ran
    std::size_t best_epoch = 0;     // 1-based
    double best_val_mae = 0.0;
    std::size_t optimizer_steps = 0;
    double max_post_clip_grad_norm = 0.0;
    std::size_t clipped_steps = 0;
    bool early_stopped = false;
};

struct TrainSet {
    Matrix rows;                 // raw features
    std::vector<double> targets; // um
    std::vector<double> weights; // empty means all 1.0
};

struct EvalSet {
    Matrix rows;
    std::vector<double> targets;
};

struct TrainOptions {
    bool early_stopping = true;
    // Return the snapshot with the lowest val MAE instead of the last epoch.
    bool restore_best = true;
};

struct TrainResult {
    MlpModel model;
    TrainReport report;
};

// Minimizes sample-weighted MSE + l2 * sum(W^2) with Adam and global-norm
// gradient clipping. The scaler is fitted on `train` only. Val MAE (um)
// drives early stopping, the plateau scheduler, and snapshot selection.
TrainResult train_mlp(const MlpModel& init, const TrainSet& train, const EvalSet& val, const MlpConfig& config,
                      const TrainOptions& options = {});

// sum_i w_i (p_i - t_i)^2 / sum_i w_i; 0 when all weights are 0.
double weighted_mse(std::span<const double> pred, std::span<const double> target, std::span<const double> weights);

// Weighted MSE of the model (eval mode) on a frozen batch, in scaled target space.
double batch_loss(const MlpModel& model, const Matrix& raw_rows, std::span<const double> targets,
                  std::span<const double> weights);

struct GradientCheckOptions {
    double epsilon = 1e-5;
    Mode mode = Mode::eval;
    // 0 checks every parameter; otherwise a seeded subset of this size.
    std::size_t max_parameters = 0;
    std::uint64_t seed = 7;
};

struct GradientCheckResult {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    std::size_t checked = 0;
};

// Compares backprop of L = mean((net(x) - y)^2) (+ optional l2) against
// central finite differences. Relative error per parameter:
// |a - n| / max(|a|, |n|, 1e-6). Dropout is disabled for the check.
GradientCheckResult gradient_check(const Network& net, const Matrix& batch, std::span<const double> targets,
                                   const GradientCheckOptions& options = {});

// Analytic gradient of mean((net(x) - y)^2) w.r.t. all blocks.
Gradients mse_gradients(const Network& net, const Matrix& batch, std::span<const double> targets, Mode mode);

} // namespace roughcast::nn
