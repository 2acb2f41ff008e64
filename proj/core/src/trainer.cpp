#include "lmfcn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "lmfcn/log.hpp"
#include "lmfcn/metrics.hpp"

namespace lmfcn {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<int> to_classes(std::span<const double> decisions) {
  std::vector<int> out(decisions.size());
  for (std::size_t i = 0; i < decisions.size(); ++i) out[i] = decisions[i] >= 0.0 ? 1 : 0;
  return out;
}

void require_binary(const Dataset& d, const char* what) {
  if (d.size() == 0) throw DataError(std::string(what) + ": empty split");
  for (int l : d.labels) {
    if (l != 0 && l != 1) throw DataError(std::string(what) + ": binary training needs labels in {0,1}");
  }
}

Dataset one_vs_rest(const Dataset& d, int positive) {
  Dataset out = d;
  out.class_names = {"rest", d.class_names.at(static_cast<std::size_t>(positive))};
  for (int& l : out.labels) l = l == positive ? 1 : 0;
  return out;
}

}  // namespace

void Hyperparams::validate() const {
  if (max_epochs < 1) throw ParameterError("hyperparams: max_epochs must be >= 1");
  if (ova_epochs < 1) throw ParameterError("hyperparams: ova_epochs must be >= 1");
  if (latent_dim < 1) throw ParameterError("hyperparams: latent dimension must be >= 1");
  if (in_channels < 1) throw ParameterError("hyperparams: input channels must be >= 1");
  if (!(C > 0.0)) throw ParameterError("hyperparams: C must be > 0");
  if (!(learning_rate > 0.0)) throw ParameterError("hyperparams: learning rate must be > 0");
  if (!(smo_tol > 0.0)) throw ParameterError("hyperparams: SMO tolerance must be > 0");
  if (gamma_rule == GammaRule::fixed && !(gamma > 0.0)) throw ParameterError("hyperparams: fixed gamma must be > 0");
}

LmfcnState init_state(const Hyperparams& hp) {
  hp.validate();
  AdamConfig adam;
  adam.learning_rate = hp.learning_rate;
  return {fcn_init(hp.seed, hp.in_channels, hp.latent_dim), Adam(adam), 0};
}

EpochResult train_epoch(LmfcnState& state, const Dataset& train, const Dataset* val, const Hyperparams& hp) {
  require_binary(train, "train_epoch");
  const auto start = Clock::now();
  EpochResult res;
  EpochRecord& rec = res.record;
  rec.epoch = state.epoch + 1;
  res.snapshot = state.params;

  // 1. Latent matrix of the whole training set.
  res.train_latent = fcn_embed(train.images, state.params);
  rec.stage_end_ms[static_cast<std::size_t>(Stage::embed)] = ms_since(start);
  const Matrix& latent = res.train_latent;
  if (!latent.allFinite()) throw TrainingError("train_epoch: non-finite latent representation", rec);

  // 2. Geometry.
  rec.gamma = select_gamma(hp.gamma_rule, latent, hp.gamma);
  const GeometryMatrices geo = compute_geometry(latent, rec.gamma);
  rec.stage_end_ms[static_cast<std::size_t>(Stage::geometry)] = ms_since(start);

  // 3. Large-margin classifier on K.
  const auto y = signed_labels(train.labels, 1);
  SmoOptions smo;
  smo.C = hp.C;
  smo.tol = hp.smo_tol;
  res.svm = smo_train(geo.kernel, y, smo);
  res.svm.gamma = rec.gamma;
  const auto train_pred = to_classes(svm_decisions(res.svm, geo.kernel));
  rec.train_bacc = balanced_accuracy(train.labels, train_pred, 2);
  if (val != nullptr && val->size() > 0) {
    const Matrix val_latent = fcn_embed(val->images, state.params);
    const Matrix block = cross_kernel(val_latent, latent, rec.gamma);
    rec.val_bacc = balanced_accuracy(val->labels, to_classes(svm_decisions(res.svm, block)), 2);
  }
  rec.stage_end_ms[static_cast<std::size_t>(Stage::svm)] = ms_since(start);

  // 4. Partition and anchors.
  res.partition = partition_instances(train.labels, train_pred, res.svm.support);
  const InstancePartition& part = res.partition;
  res.anchors = build_anchor_tables(geo.dist, part, hp.sv_close, hp.wr_close, hp.sh_close);
  rec.n_sv = part.support.size();
  rec.n_q = part.misclassified.size();
  rec.n_r = part.correct.size();
  rec.misclassified_sv = part.misclassified_support;
  if (res.anchors.empty_type1_rows > 0) {
    log(LogLevel::debug, "epoch " + std::to_string(rec.epoch) + ": " + std::to_string(res.anchors.empty_type1_rows) +
                             " support vectors without type-1 anchors");
  }
  rec.stage_end_ms[static_cast<std::size_t>(Stage::anchors)] = ms_since(start);

  // 5. Gradient pass over S, Q and the R members that have type-3 anchors.
  std::vector<std::size_t> r_used;
  AnchorTable g_used;
  for (std::size_t k = 0; k < res.anchors.type3.size(); ++k) {
    if (!res.anchors.type3[k].empty()) {
      r_used.push_back(part.correct[k]);
      g_used.push_back(res.anchors.type3[k]);
    }
  }
  rec.n_r_used = r_used.size();
  auto& rows = res.backprop_rows;
  rows = part.support;
  rows.insert(rows.end(), part.misclassified.begin(), part.misclassified.end());
  rows.insert(rows.end(), r_used.begin(), r_used.end());
  rec.n_backprop = rows.size();

  std::vector<Image> selected;
  selected.reserve(rows.size());
  for (std::size_t r : rows) selected.push_back(train.images[r]);
  FcnForward live = fcn_forward(selected, state.params, nn::Mode::train);

  const auto n_s = static_cast<Eigen::Index>(part.support.size());
  const auto n_q = static_cast<Eigen::Index>(part.misclassified.size());
  const auto n_r = static_cast<Eigen::Index>(r_used.size());
  const LossTerm sv = loss_sv(live.latent.topRows(n_s), latent, res.anchors.type1);
  const LossTerm mc = loss_mc(live.latent.middleRows(n_s, n_q), latent, res.anchors.type2);
  // L_cc's numerator counts every member of R, so the table is padded with
  // empty rows (zero live rows) for members that contribute no anchors.
  LossTerm cc;
  if (n_r > 0) {
    AnchorTable padded = g_used;
    padded.resize(part.correct.size());
    Matrix live_r = Matrix::Zero(static_cast<Eigen::Index>(part.correct.size()), live.latent.cols());
    live_r.topRows(n_r) = live.latent.bottomRows(n_r);
    cc = loss_cc(live_r, latent, padded);
    if (cc.grad.rows() > 0) cc.grad.conservativeResize(n_r, Eigen::NoChange);
  }

  rec.loss = total_loss(sv.value, mc.value, cc.value);
  rec.loss.n_sv = part.support.size();
  rec.loss.n_q = part.misclassified.size();
  rec.loss.n_r = part.correct.size();
  rec.loss.sv_close = hp.sv_close;
  rec.loss.wr_close = hp.wr_close;
  rec.loss.sh_close = hp.sh_close;
  if (!std::isfinite(rec.loss.total)) {
    rec.ms = ms_since(start);
    throw TrainingError("train_epoch: non-finite loss at epoch " + std::to_string(rec.epoch), rec);
  }

  Matrix grad = Matrix::Zero(live.latent.rows(), live.latent.cols());
  grad.topRows(n_s) = sv.grad;
  if (n_q > 0) grad.middleRows(n_s, n_q) = mc.grad;
  if (n_r > 0 && cc.grad.size() > 0) grad.bottomRows(n_r) = cc.grad;

  const FcnGrads grads = fcn_backward(grad, live.caches, state.params);
  const auto slots = param_slots(state.params, grads);
  try {
    state.optimizer.step(slots);
  } catch (const NumericError& e) {
    rec.ms = ms_since(start);
    throw TrainingError(e.what(), rec);
  }
  ++state.epoch;
  rec.stage_end_ms[static_cast<std::size_t>(Stage::backprop)] = ms_since(start);
  rec.ms = ms_since(start);
  return res;
}

std::vector<double> BinaryKernelClassifier::decisions(const Matrix& query) const {
  return svm_decisions(svm, cross_kernel(query, train_latent, gamma));
}

std::vector<int> BinaryKernelClassifier::predict(const Matrix& query) const { return to_classes(decisions(query)); }

LmfcnModel fit(const Dataset& train, const Dataset& val, const Hyperparams& hp) {
  hp.validate();
  require_binary(train, "fit");
  require_binary(val, "fit (validation)");

  LmfcnState state = init_state(hp);
  LmfcnModel model;
  model.hp = hp;
  std::optional<EpochResult> best;
  for (std::size_t e = 0; e < hp.max_epochs; ++e) {
    EpochResult res = train_epoch(state, train, &val, hp);
    std::ostringstream msg;
    msg << "epoch " << res.record.epoch << " loss " << res.record.loss.total << " |S| " << res.record.n_sv
        << " |Q| " << res.record.n_q << " train " << res.record.train_bacc << " val " << res.record.val_bacc;
    log_info(msg.str());
    model.records.push_back(res.record);
    const bool improved = !best || res.record.val_bacc > best->record.val_bacc;
    if (improved) best = std::move(res);
    if (hp.stop_on_perfect_val && model.records.back().val_bacc >= 1.0) break;
  }

  // The snapshot's latents and SVM are exactly what a retrain on it would give.
  model.best_epoch = best->record.epoch;
  model.fcn = std::move(best->snapshot);
  model.classifier.train_latent = std::move(best->train_latent);
  model.classifier.gamma = best->record.gamma;
  model.classifier.svm = std::move(best->svm);
  return model;
}

Matrix concat_latents(std::span<const Image> images, std::span<const FcnParams> fcns) {
  if (fcns.empty()) throw ParameterError("concat_latents: no networks");
  std::vector<Matrix> parts;
  Eigen::Index width = 0;
  for (const FcnParams& f : fcns) {
    parts.push_back(fcn_embed(images, f));
    width += parts.back().cols();
  }
  Matrix out(static_cast<Eigen::Index>(images.size()), width);
  Eigen::Index col = 0;
  for (const Matrix& p : parts) {
    out.middleCols(col, p.cols()) = p;
    col += p.cols();
  }
  return out;
}

MulticlassLmfcnModel fit_multiclass(const Dataset& train, const Dataset& val, const Hyperparams& hp) {
  hp.validate();
  const std::size_t classes = train.num_classes();
  if (classes < 3) throw ParameterError("fit_multiclass: needs at least 3 classes (use fit for binary problems)");
  if (val.size() == 0 || train.size() == 0) throw DataError("fit_multiclass: empty split");
  const auto counts = train.class_counts();
  for (std::size_t k = 0; k < classes; ++k) {
    if (counts[k] < 2) {
      throw DataError("fit_multiclass: class '" + train.class_names[k] + "' has fewer than 2 training instances");
    }
  }

  MulticlassLmfcnModel model;
  model.hp = hp;
  for (std::size_t k = 0; k < classes; ++k) {
    Hyperparams sub = hp;
    sub.max_epochs = hp.ova_epochs;
    sub.seed = hp.seed + k;
    const Dataset train_k = one_vs_rest(train, static_cast<int>(k));
    const Dataset val_k = one_vs_rest(val, static_cast<int>(k));
    LmfcnModel m = fit(train_k, val_k, sub);
    model.sub_train_bacc.push_back(m.records.at(m.best_epoch - 1).train_bacc);
    model.sub_records.push_back(std::move(m.records));
    model.sub_best_epochs.push_back(m.best_epoch);
    model.fcns.push_back(std::move(m.fcn));
  }

  const Matrix latent = concat_latents(train.images, model.fcns);
  const double gamma = select_gamma(hp.gamma_rule, latent, hp.gamma);
  model.svm = ova_train(latent, train.labels, classes, hp.C, gamma, hp.smo_tol);
  model.train_bacc = balanced_accuracy(train.labels, ova_predict(model.svm, latent), classes);
  model.val_bacc = balanced_accuracy(val.labels, predict(model, val), classes);
  return model;
}

std::vector<int> predict(const LmfcnModel& model, const Dataset& data) {
  return model.classifier.predict(fcn_embed(data.images, model.fcn));
}

std::vector<int> predict(const MulticlassLmfcnModel& model, const Dataset& data) {
  return ova_predict(model.svm, concat_latents(data.images, model.fcns));
}

}  // namespace lmfcn
