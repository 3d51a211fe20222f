#include "roughcast/nn/network.hpp"

#include "roughcast/error.hpp"

#include <cmath>

namespace roughcast::nn {

std::string_view to_string(Activation a)
{
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::elu: return "elu";
    case Activation::leaky_relu: return "leaky_relu";
    }
    return "relu";
}

Activation parse_activation(std::string_view name)
{
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "elu") return Activation::elu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    fail(Errc::config, "unknown activation '" + std::string(name) + "'");
}

double Gradients::global_norm() const
{
    double ss = 0.0;
    for (const auto& block : blocks) {
        for (double g : block) {
            ss += g * g;
        }
    }
    return std::sqrt(ss);
}

void Gradients::scale(double factor)
{
    for (auto& block : blocks) {
        for (double& g : block) {
            g *= factor;
        }
    }
}

double clip_global_norm(Gradients& grads, double max_norm)
{
    const double norm = grads.global_norm();
    if (norm > max_norm) {
        grads.scale(max_norm / norm);
    }
    return norm;
}

Network::Network(std::vector<DenseLayer> layers, Activation activation, double dropout, double bn_momentum,
                 double leaky_slope)
    : layers_(std::move(layers)), activation_(activation), dropout_(dropout), bn_momentum_(bn_momentum),
      leaky_slope_(leaky_slope)
{
    if (layers_.empty()) {
        fail(Errc::config, "network needs at least an output layer");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.bias.size() != layer.fan_out()) {
            fail(Errc::contract, "bias length does not match layer width");
        }
        if (l > 0 && layers_[l - 1].fan_out() != layer.fan_in()) {
            fail(Errc::contract, "layer shapes do not chain");
        }
        if (layer.bn) {
            if (l + 1 == layers_.size()) {
                fail(Errc::contract, "output layer cannot carry batch normalization");
            }
            const auto w = layer.fan_out();
            if (layer.bn->gamma.size() != w || layer.bn->beta.size() != w || layer.bn->running_mean.size() != w ||
                layer.bn->running_var.size() != w) {
                fail(Errc::contract, "batch-norm parameter length mismatch");
            }
            for (double v : layer.bn->running_var) {
                if (!(v > 0.0)) {
                    fail(Errc::contract, "running variance must be positive");
                }
            }
        }
    }
    if (dropout_ < 0.0 || dropout_ > 0.9) {
        fail(Errc::config, "dropout must lie in [0, 0.9]");
    }
}

Network Network::create(const NetworkShape& shape, Rng& rng)
{
    if (shape.input_dim == 0 || shape.output_dim == 0) {
        fail(Errc::config, "network dimensions must be positive");
    }
    std::vector<DenseLayer> layers;
    std::size_t fan_in = shape.input_dim;
    auto make_layer = [&](std::size_t fan_out, bool hidden) {
        DenseLayer layer;
        layer.weight = Matrix(fan_in, fan_out);
        layer.bias.assign(fan_out, 0.0);
        const bool rectifier = hidden && shape.activation != Activation::tanh;
        const double limit = std::sqrt((rectifier ? 6.0 : 3.0) / static_cast<double>(fan_in));
        for (double& w : layer.weight.data()) {
            w = rng.uniform(-limit, limit);
        }
        if (hidden && shape.batch_norm) {
            layer.bn = BatchNorm{std::vector<double>(fan_out, 1.0), std::vector<double>(fan_out, 0.0),
                                 std::vector<double>(fan_out, 0.0), std::vector<double>(fan_out, 1.0)};
        }
        fan_in = fan_out;
        return layer;
    };
    for (auto width : shape.hidden_widths) {
        if (width == 0) {
            fail(Errc::config, "hidden widths must be positive");
        }
        layers.push_back(make_layer(width, true));
    }
    layers.push_back(make_layer(shape.output_dim, false));
    return Network(std::move(layers), shape.activation, shape.dropout, shape.bn_momentum, shape.leaky_slope);
}

bool Network::has_batch_norm() const
{
    for (const auto& l : layers_) {
        if (l.bn) {
            return true;
        }
    }
    return false;
}

double Network::activate(double v) const
{
    switch (activation_) {
    case Activation::relu: return v > 0.0 ? v : 0.0;
    case Activation::tanh: return std::tanh(v);
    case Activation::elu: return v > 0.0 ? v : std::expm1(v);
    case Activation::leaky_relu: return v > 0.0 ? v : leaky_slope_ * v;
    }
    return v;
}

double Network::activation_derivative(double pre, double post) const
{
    switch (activation_) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - post * post;
    case Activation::elu: return pre > 0.0 ? 1.0 : post + 1.0;
    case Activation::leaky_relu: return pre > 0.0 ? 1.0 : leaky_slope_;
    }
    return 1.0;
}

Matrix Network::forward(const Matrix& x, Mode mode, ForwardCache* cache, Rng* dropout_rng) const
{
    if (x.cols() != input_dim()) {
        fail(Errc::schema, "input width " + std::to_string(x.cols()) + " does not match network input " +
                               std::to_string(input_dim()));
    }
    const std::size_t batch = x.rows();
    if (mode == Mode::train && has_batch_norm() && batch < 2) {
        fail(Errc::batch_too_small, "train-mode batch normalization needs a batch of at least 2 rows");
    }
    if (cache) {
        cache->mode = mode;
        cache->layers.assign(layers_.size(), LayerCache{});
    }

    Matrix current = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        const bool hidden = l + 1 < layers_.size();
        Matrix z = matmul(current, layer.weight);
        const std::size_t width = layer.fan_out();
        for (std::size_t r = 0; r < batch; ++r) {
            auto row = z.row(r);
            for (std::size_t j = 0; j < width; ++j) {
                row[j] += layer.bias[j];
            }
        }
        if (!hidden) {
            if (cache) {
                cache->layers[l].input = std::move(current);
                cache->layers[l].output = z;
            }
            return z;
        }

        LayerCache* lc = cache ? &cache->layers[l] : nullptr;
        Matrix pre = z;
        if (layer.bn) {
            const auto& bn = *layer.bn;
            std::vector<double> mu(width, 0.0);
            std::vector<double> var(width, 0.0);
            if (mode == Mode::train) {
                for (std::size_t r = 0; r < batch; ++r) {
                    for (std::size_t j = 0; j < width; ++j) {
                        mu[j] += z(r, j);
                    }
                }
                for (double& m : mu) {
                    m /= static_cast<double>(batch);
                }
                for (std::size_t r = 0; r < batch; ++r) {
                    for (std::size_t j = 0; j < width; ++j) {
                        const double d = z(r, j) - mu[j];
                        var[j] += d * d;
                    }
                }
                for (double& v : var) {
                    v /= static_cast<double>(batch);
                }
            } else {
                mu = bn.running_mean;
                var = bn.running_var;
            }
            std::vector<double> inv_std(width);
            for (std::size_t j = 0; j < width; ++j) {
                inv_std[j] = 1.0 / std::sqrt(var[j] + kBatchNormEpsilon);
            }
            Matrix xhat(batch, width);
            for (std::size_t r = 0; r < batch; ++r) {
                for (std::size_t j = 0; j < width; ++j) {
                    xhat(r, j) = (z(r, j) - mu[j]) * inv_std[j];
                    pre(r, j) = bn.gamma[j] * xhat(r, j) + bn.beta[j];
                }
            }
            if (lc) {
                lc->normalized = std::move(xhat);
                lc->inv_std = std::move(inv_std);
                lc->batch_mean = std::move(mu);
                lc->batch_var = std::move(var);
            }
        }

        Matrix out(batch, width);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out.data()[i] = activate(pre.data()[i]);
        }
        if (mode == Mode::train && dropout_ > 0.0) {
            if (!dropout_rng) {
                fail(Errc::contract, "train-mode dropout needs a generator");
            }
            Matrix mask(batch, width);
            const double keep = 1.0 - dropout_;
            for (std::size_t i = 0; i < mask.size(); ++i) {
                mask.data()[i] = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
                out.data()[i] *= mask.data()[i];
            }
            if (lc) {
                lc->dropout_mask = std::move(mask);
            }
        }
        if (lc) {
            lc->input = std::move(current);
            lc->pre_activation = std::move(pre);
            lc->output = out;
        }
        current = std::move(out);
    }
    return current;
}

void Network::update_running_stats(const ForwardCache& cache)
{
    if (cache.mode != Mode::train) {
        return;
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto& layer = layers_[l];
        if (!layer.bn) {
            continue;
        }
        const auto& lc = cache.layers[l];
        const double batch = static_cast<double>(lc.input.rows());
        const double unbias = batch / (batch - 1.0);
        for (std::size_t j = 0; j < layer.fan_out(); ++j) {
            layer.bn->running_mean[j] = (1.0 - bn_momentum_) * layer.bn->running_mean[j] + bn_momentum_ * lc.batch_mean[j];
            layer.bn->running_var[j] =
                (1.0 - bn_momentum_) * layer.bn->running_var[j] + bn_momentum_ * lc.batch_var[j] * unbias;
        }
    }
}

Gradients Network::backward(const ForwardCache& cache, const Matrix& grad_output, Matrix* grad_input) const
{
    if (cache.layers.size() != layers_.size()) {
        fail(Errc::contract, "forward cache does not belong to this network");
    }
    Gradients grads = zero_gradients();
    Matrix g = grad_output;
    // Walk layers back to front; block index of layer l's W is its offset.
    std::vector<std::size_t> offsets;
    std::size_t offset = 0;
    for (const auto& layer : layers_) {
        offsets.push_back(offset);
        offset += layer.bn ? 4 : 2;
    }

    for (std::size_t li = layers_.size(); li-- > 0;) {
        const auto& layer = layers_[li];
        const auto& lc = cache.layers[li];
        const std::size_t batch = lc.input.rows();
        const std::size_t width = layer.fan_out();
        const bool hidden = li + 1 < layers_.size();
        Matrix dz;
        if (!hidden) {
            dz = g;
        } else {
            // through dropout and activation
            Matrix dpre(batch, width);
            for (std::size_t i = 0; i < dpre.size(); ++i) {
                double gi = g.data()[i];
                if (!lc.dropout_mask.empty()) {
                    gi *= lc.dropout_mask.data()[i];
                }
                const double post = activate(lc.pre_activation.data()[i]);
                dpre.data()[i] = gi * activation_derivative(lc.pre_activation.data()[i], post);
            }
            if (layer.bn) {
                const auto& bn = *layer.bn;
                auto& dgamma = grads.blocks[offsets[li] + 2];
                auto& dbeta = grads.blocks[offsets[li] + 3];
                dz = Matrix(batch, width);
                for (std::size_t r = 0; r < batch; ++r) {
                    for (std::size_t j = 0; j < width; ++j) {
                        dgamma[j] += dpre(r, j) * lc.normalized(r, j);
                        dbeta[j] += dpre(r, j);
                    }
                }
                if (cache.mode == Mode::train) {
                    const double n = static_cast<double>(batch);
                    std::vector<double> sum_dxhat(width, 0.0);
                    std::vector<double> sum_dxhat_xhat(width, 0.0);
                    for (std::size_t r = 0; r < batch; ++r) {
                        for (std::size_t j = 0; j < width; ++j) {
                            const double dxhat = dpre(r, j) * bn.gamma[j];
                            sum_dxhat[j] += dxhat;
                            sum_dxhat_xhat[j] += dxhat * lc.normalized(r, j);
                        }
                    }
                    for (std::size_t r = 0; r < batch; ++r) {
                        for (std::size_t j = 0; j < width; ++j) {
                            const double dxhat = dpre(r, j) * bn.gamma[j];
                            dz(r, j) = lc.inv_std[j] / n *
                                       (n * dxhat - sum_dxhat[j] - lc.normalized(r, j) * sum_dxhat_xhat[j]);
                        }
                    }
                } else {
                    for (std::size_t r = 0; r < batch; ++r) {
                        for (std::size_t j = 0; j < width; ++j) {
                            dz(r, j) = dpre(r, j) * bn.gamma[j] * lc.inv_std[j];
                        }
                    }
                }
            } else {
                dz = std::move(dpre);
            }
        }

        Matrix dw = matmul_tn(lc.input, dz);
        grads.blocks[offsets[li]] = std::move(dw.data());
        auto& db = grads.blocks[offsets[li] + 1];
        for (std::size_t r = 0; r < batch; ++r) {
            for (std::size_t j = 0; j < width; ++j) {
                db[j] += dz(r, j);
            }
        }
        if (li > 0 || grad_input) {
            g = matmul_nt(dz, layer.weight);
        }
    }
    if (grad_input) {
        *grad_input = std::move(g);
    }
    return grads;
}

std::vector<std::span<double>> Network::parameter_blocks()
{
    std::vector<std::span<double>> out;
    for (auto& layer : layers_) {
        out.emplace_back(layer.weight.data());
        out.emplace_back(layer.bias);
        if (layer.bn) {
            out.emplace_back(layer.bn->gamma);
            out.emplace_back(layer.bn->beta);
        }
    }
    return out;
}

std::vector<std::span<const double>> Network::parameter_blocks() const
{
    std::vector<std::span<const double>> out;
    for (const auto& layer : layers_) {
        out.emplace_back(layer.weight.data());
        out.emplace_back(layer.bias);
        if (layer.bn) {
            out.emplace_back(layer.bn->gamma);
            out.emplace_back(layer.bn->beta);
        }
    }
    return out;
}

std::vector<bool> Network::weight_block_mask() const
{
    std::vector<bool> out;
    for (const auto& layer : layers_) {
        out.push_back(true);
        out.push_back(false);
        if (layer.bn) {
            out.push_back(false);
            out.push_back(false);
        }
    }
    return out;
}

std::size_t Network::parameter_count() const
{
    std::size_t n = 0;
    for (auto block : parameter_blocks()) {
        n += block.size();
    }
    return n;
}

Gradients Network::zero_gradients() const
{
    Gradients g;
    for (auto block : parameter_blocks()) {
        g.blocks.emplace_back(block.size(), 0.0);
    }
    return g;
}

double Network::l2_penalty() const
{
    double ss = 0.0;
    for (const auto& layer : layers_) {
        for (double w : layer.weight.data()) {
            ss += w * w;
        }
    }
    return ss;
}

void Network::add_l2_gradient(Gradients& grads, double strength) const
{
    if (strength == 0.0) {
        return;
    }
    const auto mask = weight_block_mask();
    const auto blocks = parameter_blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (!mask[b]) {
            continue;
        }
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            grads.blocks[b][i] += 2.0 * strength * blocks[b][i];
        }
    }
}

Adam::Adam(const Network& net, Options options) : opt_(options)
{
    for (auto block : net.parameter_blocks()) {
        m_.emplace_back(block.size(), 0.0);
        v_.emplace_back(block.size(), 0.0);
    }
}

void Adam::step(Network& net, const Gradients& grads, double learning_rate)
{
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    auto blocks = net.parameter_blocks();
    if (blocks.size() != m_.size() || grads.blocks.size() != m_.size()) {
        fail(Errc::contract, "optimizer state does not match network");
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        auto& m = m_[b];
        auto& v = v_[b];
        const auto& g = grads.blocks[b];
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g[i];
            v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            blocks[b][i] -= learning_rate * mhat / (std::sqrt(vhat) + opt_.epsilon);
        }
    }
}

} // namespace roughcast::nn
