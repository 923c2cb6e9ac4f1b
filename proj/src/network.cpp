#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "fedspectra/errors.hpp"
#include "fedspectra/nn.hpp"

namespace fedspectra {

namespace {

constexpr double kLogClamp = 1e-12;

std::string expand_alias(const std::string& arch) {
    if (arch == "smallcnn") return "conv:8:3,relu,pool,conv:16:3,relu,pool,flatten,dense:64,relu,dense";
    if (arch == "smallcnn_bn") return "conv:8:3,bn,relu,pool,conv:16:3,bn,relu,pool,flatten,dense:64,bn,relu,dense";
    return arch;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        parts.push_back(item);
    }
    return parts;
}

std::size_t parse_size(const std::string& s, const std::string& token) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size() || v <= 0) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("architecture: bad size in layer '" + token + "'");
    }
}

Shape layer_output(const Layer& layer, const Shape& in) {
    return std::visit([&](const auto& l) { return l.output_shape(in); }, layer);
}

const char* layer_prefix(const Layer& layer) {
    switch (layer.index()) {
        case 0: return "conv";
        case 1: return "dense";
        case 4: return "bn";
        default: return "";
    }
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<Layer> parse_architecture(const std::string& arch, const Shape& input_shape, std::size_t classes) {
    const auto tokens = split(expand_alias(arch), ',');
    if (tokens.empty()) throw ConfigError("architecture: empty layer list");
    std::vector<Layer> layers;
    Shape shape = input_shape;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const auto fields = split(tokens[t], ':');
        const std::string& kind = fields[0];
        if (kind == "conv") {
            if (fields.size() != 3) throw ConfigError("architecture: conv needs conv:<out>:<kernel>");
            if (shape.size() != 3) throw ShapeError("architecture: conv requires [C,H,W] input, got " + shape_to_string(shape));
            layers.emplace_back(Conv2d(shape[0], parse_size(fields[1], tokens[t]), parse_size(fields[2], tokens[t])));
        } else if (kind == "dense") {
            if (fields.size() > 2) throw ConfigError("architecture: dense takes at most one width");
            if (shape.size() != 1) throw ShapeError("architecture: dense requires flattened input, got " + shape_to_string(shape));
            const std::size_t width = fields.size() == 2 ? parse_size(fields[1], tokens[t]) : classes;
            layers.emplace_back(Dense(shape[0], width));
        } else if (kind == "relu") {
            layers.emplace_back(Relu{});
        } else if (kind == "pool") {
            layers.emplace_back(MaxPool2{});
        } else if (kind == "bn") {
            layers.emplace_back(BatchNorm(shape.empty() ? 0 : shape[0]));
        } else if (kind == "flatten") {
            layers.emplace_back(Flatten{});
        } else {
            throw ConfigError("architecture: unknown layer '" + tokens[t] + "'");
        }
        shape = layer_output(layers.back(), shape);
    }
    if (shape != Shape{classes}) {
        throw ShapeError("architecture: network output " + shape_to_string(shape) + " does not match " +
                         std::to_string(classes) + " classes");
    }
    return layers;
}

Network::Network(Shape input_shape, std::size_t classes, const std::string& arch, std::uint64_t seed)
    : Network(input_shape, classes, parse_architecture(arch, input_shape, classes), seed) {}

Network::Network(Shape input_shape, std::size_t classes, std::vector<Layer> layers, std::uint64_t seed)
    : input_shape_(std::move(input_shape)), classes_(classes), layers_(std::move(layers)) {
    Shape shape = input_shape_;
    for (const auto& layer : layers_) shape = layer_output(layer, shape);
    if (shape != Shape{classes_}) throw ShapeError("Network: output shape does not match class count");

    std::map<std::string, int> counts;
    for (const auto& layer : layers_) {
        const std::string prefix = layer_prefix(layer);
        names_.push_back(prefix.empty() ? std::string() : prefix + std::to_string(++counts[prefix]));
    }
    init_weights(seed);
}

void Network::init_weights(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& layer : layers_) {
        std::size_t fan_in = 0;
        if (auto* c = std::get_if<Conv2d>(&layer)) fan_in = c->fan_in();
        if (auto* d = std::get_if<Dense>(&layer)) fan_in = d->fan_in();
        if (fan_in == 0) continue;
        // He-uniform weights, zero biases.
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        auto params = std::visit([](auto& l) { return l.params(); }, layer);
        for (double& v : params[0].value.data()) v = (2.0 * uniform01(rng) - 1.0) * bound;
    }
}

void Network::check_input(const Tensor& batch) const {
    if (batch.ndim() != input_shape_.size() + 1 ||
        !std::equal(input_shape_.begin(), input_shape_.end(), batch.shape().begin() + 1)) {
        throw ShapeError("Network: batch shape " + shape_to_string(batch.shape()) + " does not match input " +
                         shape_to_string(input_shape_));
    }
}

Tensor Network::logits(const Tensor& batch, bool training) {
    check_input(batch);
    Tensor x = batch;
    for (auto& layer : layers_) x = std::visit([&](auto& l) { return l.forward(x, training); }, layer);
    return x;
}

Tensor Network::forward(const Tensor& batch) { return softmax(logits(batch, false)); }

ParameterSet Network::parameters() const {
    ParameterSet set;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        auto params = std::visit([](const auto& l) { return l.params(); }, layers_[i]);
        for (const auto& p : params) set.add(names_[i] + "." + p.suffix, p.value, p.kind, p.is_batchnorm);
    }
    return set;
}

void Network::set_parameters(const ParameterSet& params) {
    require_congruent(parameters(), params);
    std::size_t k = 0;
    for_each_param([&](Param& p) { p.value = params[k++].tensor; });
}

ParameterSet Network::state() const {
    ParameterSet set = parameters();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (const auto* bn = std::get_if<BatchNorm>(&layers_[i])) {
            set.add(names_[i] + ".running_mean", bn->running_mean(), ParamKind::Vector1d, true);
            set.add(names_[i] + ".running_var", bn->running_var(), ParamKind::Vector1d, true);
        }
    }
    return set;
}

void Network::set_state(const ParameterSet& state) {
    require_congruent(this->state(), state);
    std::size_t k = 0;
    for_each_param([&](Param& p) { p.value = state[k++].tensor; });
    for (auto& layer : layers_) {
        if (auto* bn = std::get_if<BatchNorm>(&layer)) {
            bn->set_running_stats(state[k].tensor, state[k + 1].tensor);
            k += 2;
        }
    }
}

LossAndGrads Network::backward(const Tensor& batch, std::span<const int> labels, const LossSpec& loss) {
    const Tensor z = logits(batch, true);
    const std::size_t n = z.dim(0);
    if (labels.size() != n) throw ShapeError("backward: label count does not match batch");
    const Tensor probs = softmax(z);
    LossAndGrads out;
    out.loss = cross_entropy(probs, labels);
    if (loss.teacher) {
        require_same_shape(*loss.teacher, probs, "backward teacher");
        out.loss += kl_divergence(*loss.teacher, probs);
    }

    // d/dz of CE is (p - onehot)/n; KL(t || p) adds (p - t)/n.
    Tensor grad = probs;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t k = 0; k < classes_; ++k) {
            double g = probs.at(s, k) - (static_cast<std::size_t>(labels[s]) == k ? 1.0 : 0.0);
            if (loss.teacher) g += probs.at(s, k) - loss.teacher->at(s, k);
            grad.at(s, k) = g * inv_n;
        }
    }
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        grad = std::visit([&](auto& l) { return l.backward(grad); }, *it);
    }

    for (std::size_t i = 0; i < layers_.size(); ++i) {
        auto params = std::visit([](const auto& l) { return l.params(); }, layers_[i]);
        for (const auto& p : params) out.grads.add(names_[i] + "." + p.suffix, p.grad, p.kind, p.is_batchnorm);
    }
    return out;
}

Tensor softmax(const Tensor& logits) {
    if (logits.ndim() != 2) throw ShapeError("softmax: expected [n, classes]");
    Tensor out = logits;
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    for (std::size_t s = 0; s < n; ++s) {
        double* row = out.data().data() + s * k;
        const double mx = *std::max_element(row, row + k);
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (std::size_t c = 0; c < k; ++c) row[c] /= sum;
    }
    return out;
}

double cross_entropy(const Tensor& probs, std::span<const int> labels) {
    if (probs.ndim() != 2 || labels.size() != probs.dim(0)) throw ShapeError("cross_entropy: shape mismatch");
    const std::size_t n = probs.dim(0), k = probs.dim(1);
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        if (labels[s] < 0 || static_cast<std::size_t>(labels[s]) >= k) throw DomainError("cross_entropy: label out of range");
        total -= std::log(std::max(probs.at(s, static_cast<std::size_t>(labels[s])), kLogClamp));
    }
    return total / static_cast<double>(n);
}

double kl_divergence(const Tensor& teacher, const Tensor& student) {
    require_same_shape(teacher, student, "kl_divergence");
    if (teacher.ndim() != 2) throw ShapeError("kl_divergence: expected [n, classes]");
    const std::size_t n = teacher.dim(0), k = teacher.dim(1);
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t c = 0; c < k; ++c) {
            const double t = teacher.at(s, c);
            if (t <= 0.0) continue;
            total += t * (std::log(std::max(t, kLogClamp)) - std::log(std::max(student.at(s, c), kLogClamp)));
        }
    }
    return std::max(0.0, total / static_cast<double>(n));
}

double LrSchedule::rate(int epoch) const {
    if (epoch < 0) throw DomainError("learning rate: negative epoch");
    return std::ldexp(initial, -(epoch / halve_every));
}

void LrSchedule::validate() const {
    if (!(initial > 0.0) || !std::isfinite(initial)) throw ConfigError("lr must be positive");
    if (halve_every < 1) throw ConfigError("lr_halve_every must be >= 1");
}

void sgd_step(Network& net, const ParameterSet& grads, int epoch, const LrSchedule& schedule, const ProximalTerm& prox) {
    const ParameterSet current = net.parameters();
    require_congruent(current, grads);
    if (prox.mu != 0.0) {
        if (prox.anchor == nullptr) throw DomainError("sgd_step: proximal term without anchor");
        require_congruent(current, *prox.anchor);
    }
    const double lr = schedule.rate(epoch);
    std::size_t k = 0;
    net.for_each_param([&](Param& p) {
        auto w = p.value.data();
        auto g = grads[k].tensor.data();
        if (prox.mu != 0.0) {
            auto a = (*prox.anchor)[k].tensor.data();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * (g[i] + prox.mu * (w[i] - a[i]));
        } else {
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
        }
        ++k;
    });
}

}  // namespace fedspectra
