#include "fedspectra/metrics.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "fedspectra/errors.hpp"
#include "fedspectra/log.hpp"

namespace fedspectra {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
    if (classes == 0) throw DomainError("ConfusionMatrix: zero classes");
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts)
    : classes_(classes), counts_(std::move(counts)) {
    if (classes == 0 || counts_.size() != classes * classes) throw ShapeError("ConfusionMatrix: need classes^2 counts");
}

ConfusionMatrix ConfusionMatrix::from_predictions(std::size_t classes, std::span<const int> truth,
                                                  std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw ShapeError("ConfusionMatrix: truth/prediction length mismatch");
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= classes ||
            static_cast<std::size_t>(predicted[i]) >= classes) {
            throw DomainError("ConfusionMatrix: label out of range");
        }
        cm.add(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(predicted[i]));
    }
    return cm;
}

void ConfusionMatrix::add(std::size_t truth, std::size_t pred, std::uint64_t n) {
    counts_.at(truth * classes_ + pred) += n;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::vector<ClassScores> per_class_scores(const ConfusionMatrix& cm) {
    const std::size_t k = cm.classes();
    std::vector<ClassScores> out(k);
    bool empty_division = false;
    for (std::size_t c = 0; c < k; ++c) {
        std::uint64_t tp = cm(c, c), predicted = 0, actual = 0;
        for (std::size_t j = 0; j < k; ++j) {
            predicted += cm(j, c);
            actual += cm(c, j);
        }
        auto& s = out[c];
        s.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        s.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        empty_division = empty_division || predicted == 0 || actual == 0;
    }
    if (empty_division) log_warning_once("metrics", "0/0 in precision or recall scored as 0");
    return out;
}

double accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) return 0.0;
    std::uint64_t trace = 0;
    for (std::size_t c = 0; c < cm.classes(); ++c) trace += cm(c, c);
    return static_cast<double>(trace) / static_cast<double>(total);
}

namespace {

template <typename Field>
double macro_of(const ConfusionMatrix& cm, Field field) {
    const auto scores = per_class_scores(cm);
    double sum = 0.0;
    for (const auto& s : scores) sum += s.*field;
    return sum / static_cast<double>(scores.size());
}

}  // namespace

double macro_f1(const ConfusionMatrix& cm) { return macro_of(cm, &ClassScores::f1); }
double macro_precision(const ConfusionMatrix& cm) { return macro_of(cm, &ClassScores::precision); }
double macro_recall(const ConfusionMatrix& cm) { return macro_of(cm, &ClassScores::recall); }

double one_vs_rest_auc(std::span<const double> scores, std::span<const bool> positive) {
    if (scores.size() != positive.size()) throw ShapeError("auc: score/label length mismatch");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of midranks (1-based) of the positives.
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) {
            if (positive[order[t]]) {
                rank_sum += midrank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return -1.0;
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double macro_auc(const Tensor& scores, std::span<const int> labels) {
    if (scores.ndim() != 2 || scores.dim(0) != labels.size()) throw ShapeError("macro_auc: shape mismatch");
    const std::size_t n = scores.dim(0), k = scores.dim(1);
    if (n < 2) throw DomainError("macro_auc: need at least two samples");
    std::vector<double> column(n);
    std::unique_ptr<bool[]> positive(new bool[n]);
    double sum = 0.0;
    std::size_t scored = 0;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t s = 0; s < n; ++s) {
            column[s] = scores.at(s, c);
            positive[s] = labels[s] == static_cast<int>(c);
        }
        const double auc = one_vs_rest_auc(column, std::span<const bool>(positive.get(), n));
        if (auc < 0.0) {
            log_warning_once("auc", "class without positives or negatives skipped in macro AUC");
            continue;
        }
        sum += auc;
        ++scored;
    }
    if (scored == 0) throw DomainError("macro_auc: no class has both positive and negative samples");
    return sum / static_cast<double>(scored);
}

std::vector<int> argmax_rows(const Tensor& scores) {
    if (scores.ndim() != 2) throw ShapeError("argmax_rows: expected a matrix");
    const std::size_t n = scores.dim(0), k = scores.dim(1);
    std::vector<int> out(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
            if (scores.at(s, c) > scores.at(s, best)) best = c;
        }
        out[s] = static_cast<int>(best);
    }
    return out;
}

}  // namespace fedspectra
