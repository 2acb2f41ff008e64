#include "lmfcn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lmfcn {

double sq_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double d = a(k) - b(k);
    sum += d * d;
  }
  return sum;
}

Matrix pairwise_sq_dist(const Matrix& latent) {
  require_finite(std::span<const double>(latent.data(), static_cast<std::size_t>(latent.size())), "latent matrix");
  const Eigen::Index n = latent.rows();
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::max(0.0, sq_distance(latent.row(i), latent.row(j)));
      p(i, j) = v;
      p(j, i) = v;
    }
  }
  return p;
}

Matrix rbf_kernel(const Matrix& sq_dist, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("rbf_kernel: gamma must be > 0");
  // std::exp rather than Eigen's vectorised exp so the result matches cross_kernel bit for bit.
  return sq_dist.unaryExpr([gamma](double d) { return std::exp(-gamma * d); });
}

Matrix dist_matrix(const Matrix& sq_dist) { return sq_dist.array().max(0.0).sqrt().matrix(); }

GeometryMatrices compute_geometry(const Matrix& latent, double gamma) {
  GeometryMatrices g;
  g.sq_dist = pairwise_sq_dist(latent);
  g.kernel = rbf_kernel(g.sq_dist, gamma);
  g.dist = dist_matrix(g.sq_dist);
  g.gamma = gamma;
  return g;
}

Matrix cross_kernel(const Matrix& query, const Matrix& train, double gamma) {
  if (query.cols() != train.cols()) {
    throw ShapeError("cross_kernel: query width " + std::to_string(query.cols()) + " vs train width " +
                     std::to_string(train.cols()));
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("cross_kernel: gamma must be > 0");
  Matrix k(query.rows(), train.rows());
  for (Eigen::Index i = 0; i < query.rows(); ++i) {
    for (Eigen::Index j = 0; j < train.rows(); ++j) {
      k(i, j) = std::exp(-gamma * std::max(0.0, sq_distance(query.row(i), train.row(j))));
    }
  }
  return k;
}

double select_gamma(GammaRule rule, const Matrix& latent, double value) {
  const double inv_dim = 1.0 / static_cast<double>(std::max<Eigen::Index>(1, latent.cols()));
  switch (rule) {
    case GammaRule::fixed:
      if (!(value > 0.0)) throw ParameterError("select_gamma: fixed gamma must be > 0");
      return value;
    case GammaRule::inverse_dim:
      return inv_dim;
    case GammaRule::median: {
      const Matrix p = pairwise_sq_dist(latent);
      std::vector<double> upper;
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < p.cols(); ++j) upper.push_back(p(i, j));
      }
      if (upper.empty()) return inv_dim;
      auto mid = upper.begin() + static_cast<std::ptrdiff_t>(upper.size() / 2);
      std::nth_element(upper.begin(), mid, upper.end());
      return *mid > 0.0 ? 1.0 / *mid : inv_dim;
    }
  }
  return inv_dim;
}

}  // namespace lmfcn
