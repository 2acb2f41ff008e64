#include "lmfcn/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "lmfcn/geometry.hpp"
#include "lmfcn/log.hpp"
#include "lmfcn/metrics.hpp"

namespace lmfcn {
namespace {

using Clock = std::chrono::steady_clock;

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> span_of(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

std::vector<int> cnn_predict(const FcnParams& fcn, const Matrix& w, std::span<const double> b,
                             std::span<const Image> images) {
  return argmax_classes(nn::fc_logits(fcn_embed(images, fcn), w, b));
}

void require_split(const Dataset& d, const char* what) {
  if (d.size() == 0) throw DataError(std::string(what) + ": empty split");
}

}  // namespace

void init_fc_head(std::uint64_t seed, std::size_t classes, std::size_t phi, Matrix& weight, std::vector<double>& bias) {
  // Offset the stream so the head never replays the conv weights' draws.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, std::sqrt(1.0 / static_cast<double>(phi)));
  weight.resize(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(phi));
  for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = normal(rng);
  bias.assign(classes, 0.0);
}

CnnBaselineModel fit_cnn_baseline(const Dataset& train, const Dataset& val, const Hyperparams& hp,
                                  const CnnConfig& config) {
  hp.validate();
  if (config.max_epochs < 1) throw ParameterError("fit_cnn_baseline: max_epochs must be >= 1");
  require_split(train, "fit_cnn_baseline");
  require_split(val, "fit_cnn_baseline (validation)");
  const std::size_t classes = std::max(train.num_classes(), std::size_t{2});
  const std::size_t n = train.size();

  CnnBaselineModel model;
  model.hp = hp;
  model.config = config;
  FcnParams fcn = fcn_init(hp.seed, hp.in_channels, hp.latent_dim);
  Matrix w;
  std::vector<double> b;
  init_fc_head(hp.seed, classes, hp.latent_dim, w, b);
  AdamConfig adam_cfg;
  adam_cfg.learning_rate = hp.learning_rate;
  Adam adam(adam_cfg);
  std::mt19937_64 order_rng(hp.seed);
  const std::size_t batch = config.batch_size == 0 ? n : std::min(config.batch_size, n);

  double best_val = -1.0;
  for (std::size_t e = 1; e <= config.max_epochs; ++e) {
    const auto start = Clock::now();
    EpochRecord rec;
    rec.epoch = e;
    rec.n_backprop = n;
    rec.n_r = n;
    rec.train_bacc = balanced_accuracy(train.labels, cnn_predict(fcn, w, b, train.images), classes);
    rec.val_bacc = balanced_accuracy(val.labels, cnn_predict(fcn, w, b, val.images), classes);
    if (rec.val_bacc > best_val) {
      best_val = rec.val_bacc;
      model.best_epoch = e;
      model.fcn = fcn;
      model.fc_weight = w;
      model.fc_bias = b;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (batch < n) std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    for (std::size_t lo = 0; lo < n; lo += batch) {
      const std::size_t hi = std::min(n, lo + batch);
      std::vector<Image> images;
      std::vector<int> labels;
      for (std::size_t k = lo; k < hi; ++k) {
        images.push_back(train.images[order[k]]);
        labels.push_back(train.labels[order[k]]);
      }
      FcnForward fwd = fcn_forward(images, fcn, nn::Mode::train);
      const nn::SoftmaxCeResult ce = nn::fc_softmax_ce(fwd.latent, w, b, labels);
      loss_sum += ce.loss * static_cast<double>(hi - lo);
      if (!std::isfinite(ce.loss)) {
        rec.ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        throw TrainingError("fit_cnn_baseline: non-finite loss at epoch " + std::to_string(e), rec);
      }
      const FcnGrads grads = fcn_backward(ce.grad_latent, fwd.caches, fcn);
      auto slots = param_slots(fcn, grads);
      slots.push_back({"fc.weight", span_of(w), span_of(ce.grad_weight)});
      slots.push_back({"fc.bias", b, ce.grad_bias});
      adam.step(slots);
    }
    rec.loss.total = loss_sum / static_cast<double>(n);
    rec.ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    log_info("cnn epoch " + std::to_string(e) + " ce " + std::to_string(rec.loss.total) + " train " +
             std::to_string(rec.train_bacc) + " val " + std::to_string(rec.val_bacc));
    model.records.push_back(rec);
    if (config.stop_on_perfect_val && rec.val_bacc >= 1.0) break;
  }
  return model;
}

std::vector<int> predict(const CnnBaselineModel& model, const Dataset& data) {
  return cnn_predict(model.fcn, model.fc_weight, model.fc_bias, data.images);
}

LbpBaselineModel fit_lbp_baseline(const Dataset& train, const Hyperparams& hp) {
  hp.validate();
  require_split(train, "fit_lbp_baseline");
  const std::size_t classes = std::max(train.num_classes(), std::size_t{2});
  const Matrix features = lbp_feature_matrix(train.images);
  const double gamma = select_gamma(hp.gamma_rule, features, hp.gamma);
  LbpBaselineModel m;
  m.svm = ova_train(features, train.labels, classes, hp.C, gamma, hp.smo_tol);
  m.train_bacc = balanced_accuracy(train.labels, ova_predict(m.svm, features), classes);
  return m;
}

std::vector<int> predict(const LbpBaselineModel& model, const Dataset& data) {
  return ova_predict(model.svm, lbp_feature_matrix(data.images));
}

}  // namespace lmfcn
