#pragma once

#include <span>
#include <vector>

namespace lmfcn {

/// counts[t][p]: instances of true class t predicted as p.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes);

/// Recall per true class; throws ParameterError for a class with no instances.
std::vector<double> per_class_recall(const ConfusionMatrix& cm);

/// Unweighted mean of per-class recall. The class count is inferred from the
/// largest label. Throws ParameterError on empty or mismatched input, or when
/// a class below the largest label never occurs in y_true.
double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// Same, for an explicit class count.
double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes);

}  // namespace lmfcn
