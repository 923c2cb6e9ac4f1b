#pragma once

#include <vector>

#include "fedspectra/data_synth.hpp"
#include "fedspectra/metrics.hpp"
#include "fedspectra/nn.hpp"

namespace fedspectra {

struct ModelMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    /// NaN when no class in the split has both positives and negatives.
    double macro_auc = 0.0;
    double loss = 0.0;
    std::vector<ClassScores> per_class;
};

/// Inference-mode metrics of `net` on a split. Throws DomainError on an empty split.
ModelMetrics evaluate_model(Network& net, const DataSplit& split);

/// Inference-mode posteriors for the whole split, computed in chunks.
Tensor predict(Network& net, const DataSplit& split);

}  // namespace fedspectra
