// Finite-difference gradient checks for layers and whole networks.
#pragma once

#include <string>
#include <vector>

#include "fedspectra/nn.hpp"
#include "oracles.hpp"

namespace gradcheck {

using namespace fedspectra;

struct Result {
    std::string what;
    double error;
};

// Random input with entries kept away from ReLU/max-pool kinks.
inline Tensor kinkless(Shape shape, Rng& rng) {
    Tensor t = oracle::random_tensor(std::move(shape), rng);
    for (auto& v : t.data())
        if (std::abs(v) < 1e-2) v += v < 0 ? -0.05 : 0.05;
    return t;
}

// d/dx and d/dparams of sum(layer(x) * probe) against central differences.
template <typename L>
std::vector<Result> layer(const std::string& name, L lyr, Shape in_shape, Rng& rng) {
    for (auto& p : lyr.params()) p.value = oracle::random_tensor(p.value.shape(), rng, -0.5, 0.5);
    Tensor x = kinkless(in_shape, rng);
    const Tensor y = lyr.forward(x, true);
    const Tensor probe = oracle::random_tensor(y.shape(), rng);

    auto objective = [&] {
        L copy = lyr;
        const Tensor out = copy.forward(x, true);
        double s = 0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * probe.data()[i];
        return s;
    };
    const Tensor dx = lyr.backward(probe);
    std::vector<Result> out{{name + " input", oracle::fd_relative_error(x, dx, objective)}};
    for (auto& p : lyr.params()) {
        const Tensor analytic = p.grad;
        out.push_back({name + " " + p.suffix, oracle::fd_relative_error(p.value, analytic, objective)});
    }
    return out;
}

inline std::vector<Result> all_layers(Rng& rng) {
    std::vector<Result> out;
    auto add = [&](std::vector<Result> r) { out.insert(out.end(), r.begin(), r.end()); };
    add(layer("conv", Conv2d(2, 3, 3), {2, 2, 6, 5}, rng));
    add(layer("dense", Dense(5, 4), {3, 5}, rng));
    add(layer("relu", Relu(), {3, 7}, rng));
    add(layer("maxpool", MaxPool2(), {2, 2, 5, 6}, rng));
    add(layer("batchnorm4d", BatchNorm(3), {4, 3, 2, 3}, rng));
    add(layer("batchnorm2d", BatchNorm(4), {5, 4}, rng));
    add(layer("flatten", Flatten(), {2, 3, 2, 2}, rng));
    return out;
}

// Whole-network parameter gradients under CE, or CE + KL(teacher || model).
inline std::vector<Result> network(const std::string& arch, const Shape& input, std::uint64_t seed, bool with_teacher) {
    Rng rng(seed);
    Network net(input, 3, arch, seed);
    Shape bshape{4};
    bshape.insert(bshape.end(), input.begin(), input.end());
    const Tensor batch = kinkless(bshape, rng);
    const std::vector<int> labels{0, 2, 1, 2};
    LossSpec loss = LossSpec::ce();
    if (with_teacher) loss = LossSpec::ce_plus_kl(softmax(oracle::random_tensor({4, 3}, rng, -2, 2)));

    const auto res = net.backward(batch, labels, loss);
    ParameterSet params = net.parameters();
    auto objective = [&] {
        Network probe = net;
        probe.set_parameters(params);
        const Tensor p = softmax(probe.logits(batch, true));
        double v = cross_entropy(p, labels);
        if (loss.teacher) v += kl_divergence(*loss.teacher, p);
        return v;
    };
    const std::string tag = with_teacher ? " (ce+kl)" : " (ce)";
    std::vector<Result> out{{"loss value" + tag, std::abs(objective() - res.loss)}};
    for (std::size_t i = 0; i < params.size(); ++i)
        out.push_back({params[i].name + tag, oracle::fd_relative_error(params[i].tensor, res.grads[i].tensor, objective)});
    return out;
}

}  // namespace gradcheck
