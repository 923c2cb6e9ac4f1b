#include "fedspectra/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fedspectra/errors.hpp"

namespace fedspectra {

namespace {
constexpr std::size_t kEvalChunk = 128;
}

Tensor predict(Network& net, const DataSplit& split) {
    if (split.empty()) throw DomainError("evaluate: empty split");
    const std::size_t n = split.size(), k = net.classes();
    std::vector<double> probs;
    probs.reserve(n * k);
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < n; start += kEvalChunk) {
        idx.resize(std::min(kEvalChunk, n - start));
        std::iota(idx.begin(), idx.end(), start);
        const Tensor p = net.forward(split.batch(idx));
        probs.insert(probs.end(), p.data().begin(), p.data().end());
    }
    return Tensor({n, k}, std::move(probs));
}

ModelMetrics evaluate_model(Network& net, const DataSplit& split) {
    const Tensor probs = predict(net, split);
    const auto pred = argmax_rows(probs);
    const auto cm = ConfusionMatrix::from_predictions(net.classes(), split.labels, pred);
    ModelMetrics m;
    m.accuracy = accuracy(cm);
    m.per_class = per_class_scores(cm);
    m.macro_f1 = macro_f1(cm);
    m.macro_precision = macro_precision(cm);
    m.macro_recall = macro_recall(cm);
    m.loss = cross_entropy(probs, split.labels);
    try {
        m.macro_auc = split.size() >= 2 ? macro_auc(probs, split.labels) : std::numeric_limits<double>::quiet_NaN();
    } catch (const DomainError&) {
        m.macro_auc = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

}  // namespace fedspectra
