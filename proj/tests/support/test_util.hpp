#pragma once

// Shared helpers for unit and acceptance tests: seeded random inputs and a
// central-difference gradient oracle.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "lmfcn/dataset.hpp"
#include "lmfcn/tensor.hpp"

namespace lmfcn::testing {

inline Tensor4 random_tensor(Shape4 shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor4 t(shape);
  for (double& v : t.data()) v = u(rng);
  return t;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline Image random_image(std::size_t c, std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image im{c, h, w, std::vector<double>(c * h * w)};
  for (double& v : im.pixels) v = u(rng);
  return im;
}

/// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
/// gradient is zero (e.g. conv bias under batch norm) from dividing rounding
/// noise by zero.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  const double den = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / den;
}

/// Central difference of `f` with respect to x[i], restoring x[i] afterwards.
inline double central_difference(const std::function<double()>& f, double& xi, double h) {
  const double saved = xi;
  xi = saved + h;
  const double up = f();
  xi = saved - h;
  const double down = f();
  xi = saved;
  return (up - down) / (2.0 * h);
}

/// Largest relative error between `analytic` and central differences of `f`
/// over the coordinates `indices` of `x`.
inline double max_rel_error(const std::function<double()>& f, std::span<double> x, std::span<const double> analytic,
                            std::span<const std::size_t> indices, double h = 1e-6, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i : indices) {
    const double numeric = central_difference(f, x[i], h);
    worst = std::max(worst, rel_error(analytic[i], numeric, floor));
  }
  return worst;
}

/// All indices when n <= limit, otherwise `limit` distinct random ones.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t limit, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n > limit) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(limit);
  }
  return idx;
}

/// Weighted sum of a tensor, a generic scalar head for layer gradient checks.
inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace lmfcn::testing
