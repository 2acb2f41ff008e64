#pragma once

// Comparison models: the same FCN trained end to end with a softmax
// cross-entropy head, and uniform LBP histograms fed to the RBF SVM.

#include <cstdint>
#include <vector>

#include "lmfcn/dataset.hpp"
#include "lmfcn/fcn.hpp"
#include "lmfcn/svm.hpp"
#include "lmfcn/trainer.hpp"

namespace lmfcn {

struct CnnConfig {
  std::size_t max_epochs = 100;
  std::size_t batch_size = 0;  // 0 = whole training set per step
  bool stop_on_perfect_val = true;
};

struct CnnBaselineModel {
  FcnParams fcn;
  Matrix fc_weight;  // classes x phi
  std::vector<double> fc_bias;
  Hyperparams hp;
  CnnConfig config;
  std::vector<EpochRecord> records;
  std::size_t best_epoch = 0;
};

/// FC head initialized from `seed`: N(0, 1/phi) weights, zero bias.
void init_fc_head(std::uint64_t seed, std::size_t classes, std::size_t phi, Matrix& weight, std::vector<double>& bias);

/// Each epoch first records eval-mode train/val accuracy of the current
/// parameters, then takes cross-entropy steps over the training set (mini
/// batches in a seeded shuffled order when batch_size > 0). Like fit, the
/// recorded parameters of the best validation epoch are returned.
/// Records carry the mean cross-entropy in loss.total and n_backprop = n.
CnnBaselineModel fit_cnn_baseline(const Dataset& train, const Dataset& val, const Hyperparams& hp,
                                  const CnnConfig& config = {});

std::vector<int> predict(const CnnBaselineModel& model, const Dataset& data);

struct LbpBaselineModel {
  MulticlassSvm svm;  // on 59-bin histograms
  double train_bacc = 0.0;
};

/// Gamma follows hp.gamma_rule over the histogram matrix; C is hp.C.
LbpBaselineModel fit_lbp_baseline(const Dataset& train, const Hyperparams& hp);

std::vector<int> predict(const LbpBaselineModel& model, const Dataset& data);

}  // namespace lmfcn
