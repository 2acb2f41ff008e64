#include "lmfcn/metrics.hpp"

#include <algorithm>
#include <string>

#include "lmfcn/tensor.hpp"

namespace lmfcn {

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes) {
  if (y_true.size() != y_pred.size()) throw ParameterError("confusion_matrix: length mismatch");
  ConfusionMatrix cm(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes || static_cast<std::size_t>(p) >= classes) {
      throw ParameterError("confusion_matrix: label out of range");
    }
    ++cm[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return cm;
}

std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
  std::vector<double> recall;
  for (std::size_t t = 0; t < cm.size(); ++t) {
    std::size_t total = 0;
    for (std::size_t c : cm[t]) total += c;
    if (total == 0) throw ParameterError("per_class_recall: class " + std::to_string(t) + " has no instances");
    recall.push_back(static_cast<double>(cm[t][t]) / static_cast<double>(total));
  }
  return recall;
}

double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes) {
  if (y_true.empty()) throw ParameterError("balanced_accuracy: empty input");
  const auto recall = per_class_recall(confusion_matrix(y_true, y_pred, classes));
  double sum = 0.0;
  for (double r : recall) sum += r;
  return sum / static_cast<double>(recall.size());
}

double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) throw ParameterError("balanced_accuracy: empty input");
  if (y_true.size() != y_pred.size()) throw ParameterError("balanced_accuracy: length mismatch");
  const int max_true = *std::max_element(y_true.begin(), y_true.end());
  const int max_pred = *std::max_element(y_pred.begin(), y_pred.end());
  const auto classes = static_cast<std::size_t>(std::max(max_true, max_pred)) + 1;
  // Predicted-only classes have no recall term.
  const auto cm = confusion_matrix(y_true, y_pred, classes);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t t = 0; t < classes; ++t) {
    std::size_t total = 0;
    for (std::size_t c : cm[t]) total += c;
    if (total == 0) {
      if (static_cast<int>(t) <= max_true) {
        throw ParameterError("balanced_accuracy: class " + std::to_string(t) + " has no instances");
      }
      continue;
    }
    sum += static_cast<double>(cm[t][t]) / static_cast<double>(total);
    ++present;
  }
  return sum / static_cast<double>(present);
}

}  // namespace lmfcn
