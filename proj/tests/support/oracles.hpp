#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the code they check.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "lmfcn/tensor.hpp"

namespace lmfcn::testing {

// ---------------------------------------------------------------------------
// SVM dual by projected gradient ascent.

/// Projection onto {0 <= a_i <= C, sum y_i a_i = 0}: a_i = clip(z_i - lambda y_i),
/// with lambda found by bisection (the constraint sum is monotone in lambda).
inline std::vector<double> project_box_hyperplane(std::span<const double> z, std::span<const int> y, double C) {
  auto clipped_sum = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += y[i] * std::clamp(z[i] - lambda * y[i], 0.0, C);
    return s;
  };
  double lo = -1.0;
  double hi = 1.0;
  while (clipped_sum(lo) < 0.0) lo *= 2.0;
  while (clipped_sum(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (clipped_sum(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  const double lambda = 0.5 * (lo + hi);
  std::vector<double> a(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) a[i] = std::clamp(z[i] - lambda * y[i], 0.0, C);
  return a;
}

struct QpSolution {
  std::vector<double> alpha;
  double objective = 0.0;
};

/// Maximizes sum(a) - 1/2 a'Qa, Q_ij = y_i y_j K_ij, with accelerated
/// projected gradient steps of size 1/L.
inline QpSolution dual_qp_oracle(const Matrix& K, std::span<const int> y, double C, int iterations = 200000) {
  const auto n = static_cast<std::size_t>(K.rows());
  Eigen::MatrixXd Q(K.rows(), K.cols());
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    for (Eigen::Index j = 0; j < K.cols(); ++j) Q(i, j) = y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * K(i, j);
  const double L = std::max(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).eigenvalues().maxCoeff(), 1e-12);
  auto objective = [&](const std::vector<double>& a) {
    Eigen::Map<const Eigen::VectorXd> v(a.data(), static_cast<Eigen::Index>(n));
    return v.sum() - 0.5 * v.dot(Q * v);
  };
  std::vector<double> a(n, 0.0);
  std::vector<double> prev = a;
  std::vector<double> z(n);
  double t = 1.0;
  // Restarts keep the objective monotone, so a long run without any strict
  // improvement means the iteration sits at its fixed point.
  double best = objective(a);
  int stalled = 0;
  for (int it = 0; it < iterations && stalled < 1000; ++it) {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    std::vector<double> yk(n);
    for (std::size_t i = 0; i < n; ++i) yk[i] = a[i] + (t - 1.0) / t_next * (a[i] - prev[i]);
    Eigen::Map<const Eigen::VectorXd> yv(yk.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd grad = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)) - Q * yv;
    for (std::size_t i = 0; i < n; ++i) z[i] = yk[i] + grad(static_cast<Eigen::Index>(i)) / L;
    prev = a;
    a = project_box_hyperplane(z, y, C);
    // Restart momentum when the objective drops, which keeps the iteration monotone.
    if (objective(a) < objective(prev)) {
      a = prev;
      t = 1.0;
      ++stalled;
      continue;
    }
    const double obj = objective(a);
    stalled = obj > best ? 0 : stalled + 1;
    best = std::max(best, obj);
    t = t_next;
  }
  return {a, objective(a)};
}

// ---------------------------------------------------------------------------
// Anchor tables by filter and full sort.

struct OracleTables {
  std::vector<std::vector<std::size_t>> a, m, g;
};

/// S given; Q/R derived from labels vs predictions. Candidates are filtered
/// explicitly, then sorted by (distance, index) and truncated.
inline OracleTables anchor_oracle(const Matrix& D, const std::vector<int>& labels, const std::vector<int>& preds,
                                  const std::vector<std::size_t>& support, std::size_t sv_close,
                                  std::size_t wr_close, std::size_t sh_close) {
  const std::size_t n = labels.size();
  auto in_s = [&](std::size_t i) { return std::find(support.begin(), support.end(), i) != support.end(); };
  auto top = [&](std::size_t row, std::vector<std::size_t> cand, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t j : cand) keyed.emplace_back(D(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)), j);
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::size_t> out;
    for (std::size_t k2 = 0; k2 < std::min(k, keyed.size()); ++k2) out.push_back(keyed[k2].second);
    return out;
  };
  OracleTables t;
  for (std::size_t s = 0; s < n; ++s) {
    if (!in_s(s)) continue;
    std::vector<std::size_t> cand;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != s && !in_s(j) && labels[j] == labels[s] && preds[j] == labels[j]) cand.push_back(j);
    }
    t.a.push_back(top(s, cand, sv_close));
  }
  for (std::size_t q = 0; q < n; ++q) {
    if (in_s(q) || preds[q] == labels[q]) continue;
    std::vector<std::size_t> cand;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_s(j) && j != q) cand.push_back(j);
    }
    t.m.push_back(top(q, cand, wr_close));
  }
  if (sh_close > 0) {
    for (std::size_t r = 0; r < n; ++r) {
      if (in_s(r) || preds[r] != labels[r]) continue;
      std::vector<std::size_t> cand;
      for (std::size_t j = 0; j < n; ++j) {
        if (!in_s(j) && preds[j] == labels[j] && labels[j] != labels[r]) cand.push_back(j);
      }
      t.g.push_back(top(r, cand, sh_close));
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Uniform LBP, pixel by pixel.

/// Counts 0/1 changes around the circular 8-bit pattern.
inline int circular_transitions(unsigned code) {
  int t = 0;
  for (int k = 0; k < 8; ++k) {
    const unsigned a = (code >> k) & 1u;
    const unsigned b = (code >> ((k + 1) % 8)) & 1u;
    t += a != b ? 1 : 0;
  }
  return t;
}

/// 59-bin histogram over interior pixels of a grayscale plane.
inline std::array<double, 59> lbp_oracle(const std::vector<double>& gray, std::size_t h, std::size_t w) {
  // Uniform codes in increasing order take bins 0..57.
  std::vector<unsigned> uniform;
  for (unsigned c = 0; c < 256; ++c) {
    if (circular_transitions(c) <= 2) uniform.push_back(c);
  }
  const int dy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  const int dx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  std::array<double, 59> hist{};
  for (std::size_t y = 1; y + 1 < h; ++y) {
    for (std::size_t x = 1; x + 1 < w; ++x) {
      const double c = gray[y * w + x];
      unsigned code = 0;
      for (int k = 0; k < 8; ++k) {
        const double v = gray[(y + static_cast<std::size_t>(dy[k] + 1) - 1) * w + (x + static_cast<std::size_t>(dx[k] + 1) - 1)];
        if (v > c) code |= 1u << k;
      }
      const auto it = std::find(uniform.begin(), uniform.end(), code);
      hist[it == uniform.end() ? 58 : static_cast<std::size_t>(it - uniform.begin())] += 1.0;
    }
  }
  const double total = static_cast<double>((h - 2) * (w - 2));
  for (double& v : hist) v /= total;
  return hist;
}

}  // namespace lmfcn::testing
