#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedspectra/tensor.hpp"

namespace fedspectra {

/// Counts indexed [truth][prediction].
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes);
    ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts);

    static ConfusionMatrix from_predictions(std::size_t classes, std::span<const int> truth,
                                            std::span<const int> predicted);

    std::size_t classes() const noexcept { return classes_; }
    std::uint64_t operator()(std::size_t truth, std::size_t pred) const { return counts_[truth * classes_ + pred]; }
    void add(std::size_t truth, std::size_t pred, std::uint64_t n = 1);
    std::uint64_t total() const noexcept;

private:
    std::size_t classes_;
    std::vector<std::uint64_t> counts_;
};

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Per-class precision/recall/F1; 0/0 evaluates to 0.
std::vector<ClassScores> per_class_scores(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);
double macro_f1(const ConfusionMatrix& cm);
double macro_precision(const ConfusionMatrix& cm);
double macro_recall(const ConfusionMatrix& cm);

/// One-vs-rest ROC AUC of a single score column via midranks (ties earn 0.5).
/// Returns a negative value when the class has no positives or no negatives.
double one_vs_rest_auc(std::span<const double> scores, std::span<const bool> positive);

/// Unweighted mean of one-vs-rest AUC over classes that have both positives and
/// negatives. Throws DomainError when no class is scorable.
double macro_auc(const Tensor& scores, std::span<const int> labels);

/// Argmax per row; ties go to the lowest index.
std::vector<int> argmax_rows(const Tensor& scores);

}  // namespace fedspectra
