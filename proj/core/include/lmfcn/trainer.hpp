#pragma once

// Epoch loop of the large-margin FCN:
//   1. eval-mode forward of every training image -> latent matrix T
//   2. P, K, D from T
//   3. SMO on K -> support vectors S and predictions
//   4. partition into S / Q / R and anchor tables A, M, G
//   5. train-mode forward of S u Q u R_used, loss, backprop, optimizer step

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lmfcn/anchors.hpp"
#include "lmfcn/dataset.hpp"
#include "lmfcn/fcn.hpp"
#include "lmfcn/geometry.hpp"
#include "lmfcn/loss.hpp"
#include "lmfcn/optimizer.hpp"
#include "lmfcn/svm.hpp"

namespace lmfcn {

struct Hyperparams {
  std::size_t sv_close = 5;
  std::size_t wr_close = 1;
  std::size_t sh_close = 0;
  double C = 1.0;
  GammaRule gamma_rule = GammaRule::inverse_dim;
  double gamma = 0.0;  // used when gamma_rule == fixed
  double smo_tol = 1e-3;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 20;
  std::size_t ova_epochs = 10;  // per one-vs-all sub-problem
  std::uint64_t seed = 0;
  std::size_t latent_dim = 16;
  std::size_t in_channels = 3;
  bool stop_on_perfect_val = false;

  void validate() const;
};

enum class Stage : std::size_t { embed = 0, geometry, svm, anchors, backprop };
inline constexpr std::size_t kStageCount = 5;

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown loss;
  std::size_t n_sv = 0;
  std::size_t n_q = 0;
  std::size_t n_r = 0;
  std::size_t n_r_used = 0;    // R instances with a nonempty type-3 row
  std::size_t n_backprop = 0;  // instances in the step-5 gradient pass
  std::size_t misclassified_sv = 0;
  double gamma = 0.0;
  double train_bacc = 0.0;
  double val_bacc = 0.0;
  double ms = 0.0;
  std::array<double, kStageCount> stage_end_ms{};  // offsets from epoch start
};

/// Raised when an epoch cannot complete; carries the partially filled record.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, EpochRecord record)
      : std::runtime_error(what), record_(std::move(record)) {}
  [[nodiscard]] const EpochRecord& record() const { return record_; }

 private:
  EpochRecord record_;
};

struct LmfcnState {
  FcnParams params;
  Adam optimizer;
  std::size_t epoch = 0;  // completed epochs
};

LmfcnState init_state(const Hyperparams& hp);

struct EpochResult {
  EpochRecord record;
  FcnParams snapshot;  // parameters that produced T in this epoch (pre-update)
  Matrix train_latent;
  SvmModel svm;
  InstancePartition partition;
  AnchorTables anchors;
  std::vector<std::size_t> backprop_rows;  // dataset indices receiving gradient, S then Q then R_used
};

/// Binary labels: class 1 maps to +1.
EpochResult train_epoch(LmfcnState& state, const Dataset& train, const Dataset* val, const Hyperparams& hp);

/// RBF SVM on stored training latents; class 1 is the positive side.
struct BinaryKernelClassifier {
  SvmModel svm;
  Matrix train_latent;
  double gamma = 0.0;

  [[nodiscard]] std::vector<double> decisions(const Matrix& query) const;
  [[nodiscard]] std::vector<int> predict(const Matrix& query) const;
};

struct LmfcnModel {
  FcnParams fcn;
  BinaryKernelClassifier classifier;
  Hyperparams hp;
  std::vector<EpochRecord> records;
  std::size_t best_epoch = 0;  // 1-based
};

/// Binary training with validation-peak snapshot selection (earliest epoch
/// wins ties). The shipped SVM is the one fitted on the best snapshot's latents.
LmfcnModel fit(const Dataset& train, const Dataset& val, const Hyperparams& hp);

struct MulticlassLmfcnModel {
  std::vector<FcnParams> fcns;  // one per class, in class order
  MulticlassSvm svm;            // on concatenated latents, width phi * classes
  Hyperparams hp;
  std::vector<std::vector<EpochRecord>> sub_records;
  std::vector<std::size_t> sub_best_epochs;
  std::vector<double> sub_train_bacc;  // each binary sub-model's one-vs-all training accuracy
  double train_bacc = 0.0;
  double val_bacc = 0.0;
};

/// Concatenates per-class FCN latents: n x (phi * fcns.size()).
Matrix concat_latents(std::span<const Image> images, std::span<const FcnParams> fcns);

/// One binary LMFCN per class (class k vs rest, hp.ova_epochs each), then an
/// OVA SVM on the concatenated latent space.
MulticlassLmfcnModel fit_multiclass(const Dataset& train, const Dataset& val, const Hyperparams& hp);

/// Predicted classes for a dataset.
std::vector<int> predict(const LmfcnModel& model, const Dataset& data);
std::vector<int> predict(const MulticlassLmfcnModel& model, const Dataset& data);

}  // namespace lmfcn
