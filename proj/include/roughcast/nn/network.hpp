#pragma once

#include "roughcast/matrix.hpp"
#include "roughcast/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace roughcast::nn {

enum class Activation { relu, tanh, elu, leaky_relu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

enum class Mode { train, eval };

inline constexpr double kBatchNormEpsilon = 1e-5;

struct BatchNorm {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
};

// Affine layer y = x W + b (W is fan_in x fan_out), optionally followed by
// batch normalization. Hidden layers apply the network activation (and
// dropout in train mode) after normalization; the last layer is a linear head.
struct DenseLayer {
    Matrix weight;
    std::vector<double> bias;
    std::optional<BatchNorm> bn;

    std::size_t fan_in() const { return weight.rows(); }
    std::size_t fan_out() const { return weight.cols(); }
};

struct LayerCache {
    Matrix input;
    Matrix normalized; // BN x-hat; empty without BN
    Matrix pre_activation;
    Matrix output;
    Matrix dropout_mask; // empty when dropout inactive
    std::vector<double> inv_std;
    std::vector<double> batch_mean;
    std::vector<double> batch_var; // biased
};

struct ForwardCache {
    Mode mode = Mode::eval;
    std::vector<LayerCache> layers;
};

// Gradient blocks in parameter_blocks() order.
struct Gradients {
    std::vector<std::vector<double>> blocks;

    double global_norm() const;
    void scale(double factor);
};

struct NetworkShape {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_widths;
    std::size_t output_dim = 1;
    Activation activation = Activation::relu;
    bool batch_norm = true;
    double dropout = 0.0;
    double bn_momentum = 0.1;
    double leaky_slope = 0.2;
};

class Network {
public:
    Network() = default;
    Network(std::vector<DenseLayer> layers, Activation activation, double dropout = 0.0, double bn_momentum = 0.1,
            double leaky_slope = 0.2);

    // Fan-in scaled uniform weights (He limit sqrt(6/fan_in) for the rectifier
    // family, LeCun limit sqrt(3/fan_in) for tanh and the linear head), zero
    // biases, BN gamma = 1, beta = 0, running mean 0, running var 1.
    static Network create(const NetworkShape& shape, Rng& rng);

    std::size_t input_dim() const { return layers_.front().fan_in(); }
    std::size_t output_dim() const { return layers_.back().fan_out(); }
    std::size_t hidden_count() const { return layers_.size() - 1; }
    bool has_batch_norm() const;
    Activation activation() const { return activation_; }
    double dropout() const { return dropout_; }
    double bn_momentum() const { return bn_momentum_; }
    double leaky_slope() const { return leaky_slope_; }

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }

    // Train mode normalizes with batch statistics (batch >= 2 when BN is
    // present) and applies inverted dropout drawn from `dropout_rng`.
    // Running statistics are not touched here; see update_running_stats.
    Matrix forward(const Matrix& x, Mode mode, ForwardCache* cache = nullptr, Rng* dropout_rng = nullptr) const;

    void update_running_stats(const ForwardCache& cache);

    // Backpropagates dL/d(output). Optionally returns dL/d(input).
    Gradients backward(const ForwardCache& cache, const Matrix& grad_output, Matrix* grad_input = nullptr) const;

    // W, b, [gamma, beta] per layer, in layer order.
    std::vector<std::span<double>> parameter_blocks();
    std::vector<std::span<const double>> parameter_blocks() const;
    // True for weight-matrix blocks (the ones an L2 penalty applies to).
    std::vector<bool> weight_block_mask() const;
    std::size_t parameter_count() const;
    Gradients zero_gradients() const;

    double l2_penalty() const;
    void add_l2_gradient(Gradients& grads, double strength) const;

private:
    double activate(double v) const;
    double activation_derivative(double pre, double post) const;

    std::vector<DenseLayer> layers_;
    Activation activation_ = Activation::relu;
    double dropout_ = 0.0;
    double bn_momentum_ = 0.1;
    double leaky_slope_ = 0.2;
};

// Adam with bias correction; constants default to beta1 0.9, beta2 0.999,
// eps 1e-8.
class Adam {
public:
    struct Options {
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    };

    Adam() = default;
    Adam(const Network& net, Options options);
    explicit Adam(const Network& net) : Adam(net, Options{}) {}

    void step(Network& net, const Gradients& grads, double learning_rate);
    std::size_t steps() const { return t_; }

private:
    Options opt_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t t_ = 0;
};

// Rescales so the global L2 norm is at most max_norm. Returns the pre-clip norm.
double clip_global_norm(Gradients& grads, double max_norm);

} // namespace roughcast::nn
