#pragma once

// Kernel SVM on a precomputed Gram matrix: SMO training with maximal
// violating pair selection, prediction, and a one-vs-all multiclass wrapper.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "lmfcn/tensor.hpp"

namespace lmfcn {

inline constexpr double kSvEps = 1e-8;

class SvmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SmoOptions {
  double C = 1.0;
  double tol = 1e-3;
  std::uint64_t max_iterations = 10'000'000;
};

struct SvmModel {
  std::vector<double> alpha;
  std::vector<int> y;  // +1 / -1
  double bias = 0.0;
  std::vector<std::size_t> support;  // indices with alpha > kSvEps, ascending
  double C = 1.0;
  double gamma = 0.0;  // recorded for serialization; the solver only sees K
  std::uint64_t iterations = 0;

  [[nodiscard]] std::size_t size() const { return alpha.size(); }
};

/// Trains on an n x n kernel. Throws SvmError when only one class is
/// present or the iteration budget runs out.
SvmModel smo_train(const Matrix& kernel, std::span<const int> y, const SmoOptions& options = {});

/// sum_i alpha_i y_i k_i + b.
double svm_decision(const SvmModel& model, std::span<const double> kernel_row);

/// Sign of the decision value, 0 mapped to +1.
int svm_predict(const SvmModel& model, std::span<const double> kernel_row);

/// Decision values for every row of a (queries x n) kernel block.
std::vector<double> svm_decisions(const SvmModel& model, const Matrix& kernel_block);

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
double dual_objective(const Matrix& kernel, std::span<const int> y, std::span<const double> alpha);

/// Largest KKT violation of (alpha, b) measured on the margins y_i f(x_i).
double kkt_residual(const Matrix& kernel, const SvmModel& model);

/// +1 when label == positive, otherwise -1.
std::vector<int> signed_labels(std::span<const int> labels, int positive);

struct MulticlassSvm {
  std::size_t classes = 0;
  double gamma = 0.0;
  double C = 1.0;
  Matrix train_latent;          // rows the kernel is evaluated against
  std::vector<SvmModel> models;  // models[k]: class k vs rest
};

/// One binary SVM per class on the RBF kernel of `latent`. Throws SvmError
/// when any class in [0, classes) has no training instance.
MulticlassSvm ova_train(const Matrix& latent, std::span<const int> labels, std::size_t classes, double C,
                        double gamma, double tol = 1e-3);

/// (queries x classes) decision values.
Matrix ova_decisions(const MulticlassSvm& model, const Matrix& query_latent);

/// Argmax class per row of a decision matrix; ties go to the lowest class index.
std::vector<int> argmax_classes(const Matrix& decisions);

std::vector<int> ova_predict(const MulticlassSvm& model, const Matrix& query_latent);

}  // namespace lmfcn
