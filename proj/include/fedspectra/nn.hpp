#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedspectra/tensor.hpp"

namespace fedspectra {

/// A trainable tensor and its accumulated gradient.
struct Param {
    std::string suffix;
    Tensor value;
    Tensor grad;
    ParamKind kind;
    bool is_batchnorm = false;
};

/// Valid (unpadded) stride-1 convolution with bias. Weight is [out, in, k, k].
class Conv2d {
public:
    Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);

    Shape output_shape(const Shape& in) const;
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    std::span<Param> params() { return params_; }
    std::span<const Param> params() const { return params_; }
    std::size_t fan_in() const { return in_ * k_ * k_; }

private:
    std::size_t in_, out_, k_;
    std::vector<Param> params_;  // weight, bias
    Tensor input_;
};

class Dense {
public:
    Dense(std::size_t in_features, std::size_t out_features);

    Shape output_shape(const Shape& in) const;
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    std::span<Param> params() { return params_; }
    std::span<const Param> params() const { return params_; }
    std::size_t fan_in() const { return in_; }

private:
    std::size_t in_, out_;
    std::vector<Param> params_;  // weight [out, in], bias
    Tensor input_;
};

class Relu {
public:
    Shape output_shape(const Shape& in) const { return in; }
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    std::span<Param> params() { return {}; }
    std::span<const Param> params() const { return {}; }

private:
    Tensor input_;
};

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
class MaxPool2 {
public:
    Shape output_shape(const Shape& in) const;
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    std::span<Param> params() { return {}; }
    std::span<const Param> params() const { return {}; }

private:
    Shape input_shape_;
    std::vector<std::size_t> argmax_;
};

/// Batch normalisation over the channel axis (axis 1) of [n,C,H,W] or [n,F].
class BatchNorm {
public:
    explicit BatchNorm(std::size_t channels, double momentum = 0.1, double eps = 1e-5);

    Shape output_shape(const Shape& in) const;
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    std::span<Param> params() { return params_; }
    std::span<const Param> params() const { return params_; }

    const Tensor& running_mean() const { return running_mean_; }
    const Tensor& running_var() const { return running_var_; }
    void set_running_stats(const Tensor& mean, const Tensor& var);

private:
    std::size_t channels_;
    double momentum_, eps_;
    std::vector<Param> params_;  // gamma, beta
    Tensor running_mean_, running_var_;
    Tensor normalized_;
    std::vector<double> inv_std_;
};

class Flatten {
public:
    Shape output_shape(const Shape& in) const { return {shape_volume(in)}; }
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& grad_out);
    std::span<Param> params() { return {}; }
    std::span<const Param> params() const { return {}; }

private:
    Shape input_shape_;
};

using Layer = std::variant<Conv2d, Dense, Relu, MaxPool2, BatchNorm, Flatten>;

/// Loss used by backward: cross-entropy, optionally plus KL(teacher || model).
/// The teacher distribution is a constant during differentiation.
struct LossSpec {
    std::optional<Tensor> teacher;

    static LossSpec ce() { return {}; }
    static LossSpec ce_plus_kl(Tensor teacher_probs) { return LossSpec{std::move(teacher_probs)}; }
};

struct LossAndGrads {
    double loss = 0.0;
    ParameterSet grads;
};

/// Feed-forward classifier ending in softmax.
class Network {
public:
    /// `arch` is a comma-separated layer list, e.g. "conv:8:3,relu,pool,flatten,dense:64,relu,dense";
    /// a trailing "dense" without a width maps to `classes`. Aliases: smallcnn, smallcnn_bn.
    Network(Shape input_shape, std::size_t classes, const std::string& arch, std::uint64_t seed);
    Network(Shape input_shape, std::size_t classes, std::vector<Layer> layers, std::uint64_t seed);

    const Shape& input_shape() const noexcept { return input_shape_; }
    std::size_t classes() const noexcept { return classes_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    std::vector<Layer>& layers() noexcept { return layers_; }

    /// Raw scores [n, classes]. Training mode uses batch statistics in BatchNorm.
    Tensor logits(const Tensor& batch, bool training);
    /// Row-stochastic posteriors [n, classes] in inference mode.
    Tensor forward(const Tensor& batch);

    /// Trainable parameters in layer order.
    ParameterSet parameters() const;
    void set_parameters(const ParameterSet& params);
    /// Trainable parameters followed by BatchNorm running statistics.
    ParameterSet state() const;
    void set_state(const ParameterSet& state);

    /// Loss value and gradient of every parameter on one batch (training mode).
    LossAndGrads backward(const Tensor& batch, std::span<const int> labels, const LossSpec& loss);

    template <typename Fn>
    void for_each_param(Fn&& fn) {
        for (auto& layer : layers_)
            std::visit([&](auto& l) { for (auto& p : l.params()) fn(p); }, layer);
    }

private:
    void init_weights(std::uint64_t seed);
    void check_input(const Tensor& batch) const;

    Shape input_shape_;
    std::size_t classes_;
    std::vector<Layer> layers_;
    std::vector<std::string> names_;  // parameter-name prefix per layer
};

std::vector<Layer> parse_architecture(const std::string& arch, const Shape& input_shape, std::size_t classes);

Tensor softmax(const Tensor& logits);
/// Mean over rows of -log p[label]; probabilities clamped at 1e-12.
double cross_entropy(const Tensor& probs, std::span<const int> labels);
/// Mean over rows of sum_k teacher*log(teacher/student); logs clamped at 1e-12.
double kl_divergence(const Tensor& teacher, const Tensor& student);

struct LrSchedule {
    double initial = 3e-3;
    int halve_every = 30;

    /// initial * 0.5^floor(epoch / halve_every)
    double rate(int epoch) const;
    void validate() const;
};

struct ProximalTerm {
    double mu = 0.0;
    const ParameterSet* anchor = nullptr;
};

/// w <- w - lr(epoch) * (g + mu * (w - anchor)).
void sgd_step(Network& net, const ParameterSet& grads, int epoch, const LrSchedule& schedule,
              const ProximalTerm& prox = {});

}  // namespace fedspectra
