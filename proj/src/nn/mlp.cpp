#include "roughcast/nn/mlp.hpp"

#include "roughcast/dataset.hpp"
#include "roughcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roughcast::nn {

void MlpConfig::validate() const
{
    if (hidden_widths.empty()) {
        fail(Errc::config, "at least one hidden layer is required");
    }
    for (auto w : hidden_widths) {
        if (w == 0) {
            fail(Errc::config, "hidden widths must be positive");
        }
    }
    if (dropout_rate < 0.0 || dropout_rate > 0.9) {
        fail(Errc::config, "dropout_rate must lie in [0, 0.9]");
    }
    if (!(learning_rate > 0.0)) {
        fail(Errc::config, "learning_rate must be > 0");
    }
    if (l2_strength < 0.0) {
        fail(Errc::config, "l2_strength must be >= 0");
    }
    if (batch_size == 0 || max_epochs == 0 || early_stop_patience == 0 || plateau_patience == 0) {
        fail(Errc::config, "batch_size, max_epochs and patience values must be positive");
    }
    if (!(grad_clip_norm > 0.0)) {
        fail(Errc::config, "grad_clip_norm must be > 0");
    }
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
        fail(Errc::config, "plateau_factor must lie in (0, 1)");
    }
    if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) {
        fail(Errc::config, "bn_momentum must lie in (0, 1]");
    }
}

static std::vector<std::string> default_feature_order(std::size_t input_dim)
{
    if (input_dim == data::kFeatureCount) {
        return data::feature_order();
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < input_dim; ++i) {
        out.push_back("x" + std::to_string(i));
    }
    return out;
}

MlpModel init_mlp(const MlpConfig& config, std::size_t input_dim)
{
    config.validate();
    if (input_dim == 0) {
        fail(Errc::config, "input_dim must be >= 1");
    }
    Rng rng(derive_seed(config.seed, 0x1417));
    NetworkShape shape;
    shape.input_dim = input_dim;
    shape.hidden_widths = config.hidden_widths;
    shape.activation = config.activation;
    shape.batch_norm = true;
    shape.dropout = config.dropout_rate;
    shape.bn_momentum = config.bn_momentum;

    MlpModel model;
    model.network = Network::create(shape, rng);
    model.scaler = data::ScalerParams::identity(input_dim);
    model.feature_order = default_feature_order(input_dim);
    model.metadata.config = config;
    return model;
}

MlpModel wrap_network(Network network, data::ScalerParams scaler, std::vector<std::string> feature_order)
{
    if (scaler.width() != network.input_dim()) {
        fail(Errc::contract, "scaler width does not match network input");
    }
    MlpModel model;
    if (feature_order.empty()) {
        feature_order = default_feature_order(network.input_dim());
    }
    model.network = std::move(network);
    model.scaler = std::move(scaler);
    model.feature_order = std::move(feature_order);
    return model;
}

std::vector<double> forward(const MlpModel& model, const Matrix& raw_rows, Mode mode, Rng* dropout_rng)
{
    const Matrix scaled = data::apply_scaler(model.scaler, raw_rows);
    const Matrix out = model.network.forward(scaled, mode, nullptr, dropout_rng);
    std::vector<double> pred(out.rows());
    for (std::size_t r = 0; r < out.rows(); ++r) {
        pred[r] = data::unscale_target(model.scaler, out(r, 0));
    }
    return pred;
}

std::vector<double> MlpModel::predict(const Matrix& raw_rows) const
{
    return forward(*this, raw_rows, Mode::eval);
}

double weighted_mse(std::span<const double> pred, std::span<const double> target, std::span<const double> weights)
{
    if (pred.size() != target.size() || pred.size() != weights.size()) {
        fail(Errc::schema, "weighted_mse: length mismatch");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - target[i];
        num += weights[i] * e * e;
        den += weights[i];
    }
    return den > 0.0 ? num / den : 0.0;
}

double batch_loss(const MlpModel& model, const Matrix& raw_rows, std::span<const double> targets,
                  std::span<const double> weights)
{
    const Matrix out = model.network.forward(data::apply_scaler(model.scaler, raw_rows), Mode::eval);
    std::vector<double> scaled_targets(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        scaled_targets[i] = data::scale_target(model.scaler, targets[i]);
    }
    return weighted_mse(out.data(), scaled_targets, weights);
}

namespace {

// Mini-batch partition of a shuffled order. A trailing batch of one row is
// folded into its predecessor because train-mode BN needs two rows.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        out.emplace_back(start, std::min(n, start + batch_size));
    }
    if (out.size() > 1 && out.back().second - out.back().first == 1) {
        out.pop_back();
        out.back().second = n;
    }
    return out;
}

double val_mae(const MlpModel& model, const Matrix& scaled_val, std::span<const double> val_targets)
{
    const Matrix out = model.network.forward(scaled_val, Mode::eval);
    double sum = 0.0;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        sum += std::abs(data::unscale_target(model.scaler, out(r, 0)) - val_targets[r]);
    }
    return sum / static_cast<double>(out.rows());
}

} // namespace

TrainResult train_mlp(const MlpModel& init, const TrainSet& train, const EvalSet& val, const MlpConfig& config,
                      const TrainOptions& options)
{
    config.validate();
    const std::size_t n = train.rows.rows();
    if (n == 0 || val.rows.rows() == 0) {
        fail(Errc::insufficient_data, "training and validation sets must be non-empty");
    }
    if (train.targets.size() != n || val.targets.size() != val.rows.rows()) {
        fail(Errc::schema, "target count does not match row count");
    }
    if (!train.weights.empty() && train.weights.size() != n) {
        fail(Errc::schema, "sample weight count does not match row count");
    }
    if (n < 2 && init.network.has_batch_norm()) {
        fail(Errc::batch_too_small, "batch-normalized training needs at least 2 rows");
    }
    for (double w : train.weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            fail(Errc::validation, "sample weights must be finite and >= 0");
        }
    }

    MlpModel model = init;
    model.network = Network(init.network.layers(), init.network.activation(), config.dropout_rate, config.bn_momentum,
                            init.network.leaky_slope());
    model.scaler = config.scale_target ? data::fit_scaler(train.rows, train.targets) : data::fit_scaler(train.rows);
    model.metadata.config = config;
    model.metadata.train_rows = n;

    const Matrix x = data::apply_scaler(model.scaler, train.rows);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = data::scale_target(model.scaler, train.targets[i]);
    }
    const std::vector<double> weights = train.weights.empty() ? std::vector<double>(n, 1.0) : train.weights;
    const Matrix x_val = data::apply_scaler(model.scaler, val.rows);

    Rng shuffle_rng(derive_seed(config.seed, 0x5A));
    Rng dropout_rng(derive_seed(config.seed, 0xD0));
    Adam adam(model.network);

    TrainReport report;
    double lr = config.learning_rate;
    double best = std::numeric_limits<double>::infinity();
    double plateau_best = best;
    std::size_t bad_epochs = 0;
    std::size_t plateau_bad = 0;
    MlpModel best_model = model;

    auto order = iota_indices(n);
    const auto ranges = batch_ranges(n, config.batch_size);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (const auto& [begin, end] : ranges) {
            const std::size_t b = end - begin;
            const std::span<const std::size_t> idx(order.data() + begin, b);
            const Matrix xb = x.select_rows(idx);
            std::vector<double> yb(b);
            std::vector<double> wb(b);
            double wsum = 0.0;
            for (std::size_t i = 0; i < b; ++i) {
                yb[i] = y[idx[i]];
                wb[i] = weights[idx[i]];
                wsum += wb[i];
            }

            ForwardCache cache;
            const Matrix out = model.network.forward(xb, Mode::train, &cache, &dropout_rng);
            const double data_loss = weighted_mse(out.data(), yb, wb);
            const double loss = data_loss + config.l2_strength * model.network.l2_penalty();
            if (!std::isfinite(loss)) {
                fail(Errc::divergence, "non-finite training loss at epoch " + std::to_string(epoch));
            }
            epoch_loss += loss * static_cast<double>(b);

            Matrix grad_out(b, 1);
            if (wsum > 0.0) {
                for (std::size_t i = 0; i < b; ++i) {
                    grad_out(i, 0) = 2.0 * wb[i] * (out(i, 0) - yb[i]) / wsum;
                }
            }
            Gradients grads = model.network.backward(cache, grad_out);
            model.network.add_l2_gradient(grads, config.l2_strength);
            const double pre_norm = clip_global_norm(grads, config.grad_clip_norm);
            if (!std::isfinite(pre_norm)) {
                fail(Errc::divergence, "non-finite gradient at epoch " + std::to_string(epoch));
            }
            if (pre_norm > config.grad_clip_norm) {
                ++report.clipped_steps;
            }
            report.max_post_clip_grad_norm = std::max(report.max_post_clip_grad_norm, grads.global_norm());
            adam.step(model.network, grads, lr);
            model.network.update_running_stats(cache);
        }

        const double mae = val_mae(model, x_val, val.targets);
        if (!std::isfinite(mae)) {
            fail(Errc::divergence, "non-finite validation MAE at epoch " + std::to_string(epoch));
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(n));
        report.val_mae.push_back(mae);
        report.learning_rate.push_back(lr);
        report.stopping_epoch = epoch;

        if (mae < best) {
            best = mae;
            bad_epochs = 0;
            report.best_epoch = epoch;
            best_model = model;
        } else {
            ++bad_epochs;
        }

        if (mae < plateau_best) {
            plateau_best = mae;
            plateau_bad = 0;
        } else if (++plateau_bad >= config.plateau_patience) {
            lr = std::max(lr * config.plateau_factor, config.min_learning_rate);
            plateau_bad = 0;
        }

        if (options.early_stopping && bad_epochs >= config.early_stop_patience) {
            report.early_stopped = true;
            break;
        }
    }

    report.best_val_mae = best;
    report.optimizer_steps = adam.steps();
    MlpModel result = options.restore_best ? std::move(best_model) : std::move(model);
    result.metadata.epochs_run = report.stopping_epoch;
    result.metadata.best_val_mae = best;
    return {std::move(result), std::move(report)};
}

static double mse_loss(const Network& net, const Matrix& batch, std::span<const double> targets, Mode mode)
{
    const Matrix out = net.forward(batch, mode);
    double sum = 0.0;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        const double e = out(r, 0) - targets[r];
        sum += e * e;
    }
    return sum / static_cast<double>(out.rows());
}

Gradients mse_gradients(const Network& net, const Matrix& batch, std::span<const double> targets, Mode mode)
{
    if (targets.size() != batch.rows()) {
        fail(Errc::schema, "target count does not match batch");
    }
    ForwardCache cache;
    const Matrix out = net.forward(batch, mode, &cache);
    Matrix grad_out(out.rows(), 1);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        grad_out(r, 0) = 2.0 * (out(r, 0) - targets[r]) / static_cast<double>(out.rows());
    }
    return net.backward(cache, grad_out);
}

GradientCheckResult gradient_check(const Network& net_in, const Matrix& batch, std::span<const double> targets,
                                   const GradientCheckOptions& options)
{
    Network net(net_in.layers(), net_in.activation(), 0.0, net_in.bn_momentum(), net_in.leaky_slope());
    const Gradients analytic = mse_gradients(net, batch, targets, options.mode);

    std::vector<std::pair<std::size_t, std::size_t>> coords;
    {
        const auto blocks = net.parameter_blocks();
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            for (std::size_t i = 0; i < blocks[b].size(); ++i) {
                coords.emplace_back(b, i);
            }
        }
    }
    if (options.max_parameters > 0 && coords.size() > options.max_parameters) {
        Rng rng(options.seed);
        rng.shuffle(coords);
        coords.resize(options.max_parameters);
    }

    GradientCheckResult result;
    for (const auto& [b, i] : coords) {
        auto blocks = net.parameter_blocks();
        const double original = blocks[b][i];
        blocks[b][i] = original + options.epsilon;
        const double plus = mse_loss(net, batch, targets, options.mode);
        blocks[b][i] = original - options.epsilon;
        const double minus = mse_loss(net, batch, targets, options.mode);
        blocks[b][i] = original;

        const double numeric = (plus - minus) / (2.0 * options.epsilon);
        const double a = analytic.blocks[b][i];
        const double abs_err = std::abs(a - numeric);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
        result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
        result.max_relative_error = std::max(result.max_relative_error, abs_err / denom);
        ++result.checked;
    }
    return result;
}

} // namespace roughcast::nn
