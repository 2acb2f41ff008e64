#include "lmfcn/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lmfcn/geometry.hpp"

namespace lmfcn {
namespace {

constexpr double kMinCurvature = 1e-12;

bool in_up(int y, double a, double C) { return (y > 0 && a < C) || (y < 0 && a > 0.0); }
bool in_low(int y, double a, double C) { return (y > 0 && a > 0.0) || (y < 0 && a < C); }

void check_problem(const Matrix& kernel, std::span<const int> y) {
  const auto n = static_cast<std::size_t>(kernel.rows());
  if (kernel.rows() != kernel.cols()) throw ShapeError("smo_train: kernel must be square");
  if (y.size() != n) throw ShapeError("smo_train: label count does not match kernel size");
  bool pos = false;
  bool neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == -1) neg = true;
    else throw ParameterError("smo_train: labels must be +1 or -1");
  }
  if (!pos || !neg) throw SvmError("smo_train: both classes must be present");
}

}  // namespace

SvmModel smo_train(const Matrix& kernel, std::span<const int> y, const SmoOptions& options) {
  check_problem(kernel, y);
  if (!(options.C > 0.0)) throw ParameterError("smo_train: C must be > 0");
  if (!(options.tol > 0.0)) throw ParameterError("smo_train: tol must be > 0");

  const auto n = static_cast<std::size_t>(kernel.rows());
  const double C = options.C;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a at a = 0
  auto q = [&](std::size_t i, std::size_t j) {
    return static_cast<double>(y[i] * y[j]) * kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };

  std::uint64_t iter = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (; iter < options.max_iterations; ++iter) {
    // Maximal violating pair; scans run in index order and keep the first extremum.
    std::size_t i = n;
    std::size_t j = n;
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(y[t], alpha[t], C) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(y[t], alpha[t], C) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    gap = g_max - g_min;
    if (i == n || j == n || gap < options.tol) break;

    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kMinCurvature;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kMinCurvature;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * di + q(t, j) * dj;
  }
  if (iter >= options.max_iterations) {
    std::ostringstream msg;
    msg << "smo_train: no convergence after " << iter << " iterations (n=" << n << ", C=" << C
        << ", violation gap=" << gap << ", tol=" << options.tol << ")";
    throw SvmError(msg.str());
  }

  // Bias: mean of y_i G_i over free vectors, else midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;

  SvmModel model;
  model.alpha = std::move(alpha);
  model.y.assign(y.begin(), y.end());
  model.bias = -rho;
  model.C = C;
  model.iterations = iter;
  for (std::size_t t = 0; t < n; ++t) {
    if (model.alpha[t] > kSvEps) model.support.push_back(t);
  }
  return model;
}

double svm_decision(const SvmModel& model, std::span<const double> kernel_row) {
  if (kernel_row.size() != model.size()) {
    throw ShapeError("svm_decision: kernel row has " + std::to_string(kernel_row.size()) + " entries, model has " +
                     std::to_string(model.size()));
  }
  double f = model.bias;
  for (std::size_t i : model.support) f += model.alpha[i] * model.y[i] * kernel_row[i];
  return f;
}

int svm_predict(const SvmModel& model, std::span<const double> kernel_row) {
  return svm_decision(model, kernel_row) >= 0.0 ? 1 : -1;
}

std::vector<double> svm_decisions(const SvmModel& model, const Matrix& kernel_block) {
  std::vector<double> out(static_cast<std::size_t>(kernel_block.rows()));
  for (Eigen::Index r = 0; r < kernel_block.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = svm_decision(
        model, std::span<const double>(kernel_block.row(r).data(), static_cast<std::size_t>(kernel_block.cols())));
  }
  return out;
}

double dual_objective(const Matrix& kernel, std::span<const int> y, std::span<const double> alpha) {
  const auto n = alpha.size();
  double lin = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += alpha[i];
    for (std::size_t j = 0; j < n; ++j) {
      quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return lin - 0.5 * quad;
}

double kkt_residual(const Matrix& kernel, const SvmModel& model) {
  const auto n = model.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = svm_decision(
        model, std::span<const double>(kernel.row(static_cast<Eigen::Index>(i)).data(), n));
    const double m = model.y[i] * f - 1.0;
    const double a = model.alpha[i];
    double v = 0.0;
    if (a <= kSvEps) v = std::max(0.0, -m);
    else if (a >= model.C - kSvEps) v = std::max(0.0, m);
    else v = std::abs(m);
    worst = std::max(worst, v);
  }
  // Equality constraint sum alpha_i y_i = 0.
  double eq = 0.0;
  for (std::size_t i = 0; i < n; ++i) eq += model.alpha[i] * model.y[i];
  return std::max(worst, std::abs(eq));
}

std::vector<int> signed_labels(std::span<const int> labels, int positive) {
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == positive ? 1 : -1;
  return y;
}

MulticlassSvm ova_train(const Matrix& latent, std::span<const int> labels, std::size_t classes, double C,
                        double gamma, double tol) {
  if (classes < 2) throw ParameterError("ova_train: need at least two classes");
  if (static_cast<Eigen::Index>(labels.size()) != latent.rows()) throw ShapeError("ova_train: label count mismatch");
  std::vector<std::size_t> counts(classes, 0);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes) throw ParameterError("ova_train: label out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t k = 0; k < classes; ++k) {
    if (counts[k] == 0) throw SvmError("ova_train: class " + std::to_string(k) + " has no training instances");
  }

  MulticlassSvm m;
  m.classes = classes;
  m.gamma = gamma;
  m.C = C;
  m.train_latent = latent;
  const Matrix kernel = rbf_kernel(pairwise_sq_dist(latent), gamma);
  SmoOptions opts;
  opts.C = C;
  opts.tol = tol;
  for (std::size_t k = 0; k < classes; ++k) {
    const auto y = signed_labels(labels, static_cast<int>(k));
    SvmModel model = smo_train(kernel, y, opts);
    model.gamma = gamma;
    m.models.push_back(std::move(model));
  }
  return m;
}

Matrix ova_decisions(const MulticlassSvm& model, const Matrix& query_latent) {
  const Matrix block = cross_kernel(query_latent, model.train_latent, model.gamma);
  Matrix out(query_latent.rows(), static_cast<Eigen::Index>(model.classes));
  for (std::size_t k = 0; k < model.classes; ++k) {
    const auto d = svm_decisions(model.models[k], block);
    for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, static_cast<Eigen::Index>(k)) = d[static_cast<std::size_t>(r)];
  }
  return out;
}

std::vector<int> argmax_classes(const Matrix& decisions) {
  std::vector<int> out(static_cast<std::size_t>(decisions.rows()));
  for (Eigen::Index r = 0; r < decisions.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < decisions.cols(); ++k) {
      if (decisions(r, k) > decisions(r, best)) best = k;
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> ova_predict(const MulticlassSvm& model, const Matrix& query_latent) {
  return argmax_classes(ova_decisions(model, query_latent));
}

}  // namespace lmfcn
