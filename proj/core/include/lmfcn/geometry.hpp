#pragma once

// Pairwise geometry over latent rows: squared distances P, RBF kernel K and
// Euclidean distances D. P is computed once; K and D are derived from it.

#include "lmfcn/tensor.hpp"

namespace lmfcn {

struct GeometryMatrices {
  Matrix sq_dist;  // P
  Matrix kernel;   // K
  Matrix dist;     // D
  double gamma = 0.0;
};

/// Squared Euclidean distance between two rows, summed in column order.
/// Shared by every pairwise routine so identical inputs give identical bits.
double sq_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b);

/// p_ij = sum_b (T_ib - T_jb)^2; symmetric by construction, zero diagonal.
Matrix pairwise_sq_dist(const Matrix& latent);

/// k_ij = exp(-gamma * p_ij). Throws ParameterError for gamma <= 0.
Matrix rbf_kernel(const Matrix& sq_dist, double gamma);

/// d_ij = sqrt(p_ij).
Matrix dist_matrix(const Matrix& sq_dist);

/// P, K and D in one pass.
GeometryMatrices compute_geometry(const Matrix& latent, double gamma);

/// m x n RBF block between query rows and training rows.
Matrix cross_kernel(const Matrix& query, const Matrix& train, double gamma);

enum class GammaRule { inverse_dim, median, fixed };

/// inverse_dim: 1/phi. median: 1/(upper median) of the strictly upper off-diagonal P
/// entries (falls back to 1/phi when that median is 0). fixed: `value`.
double select_gamma(GammaRule rule, const Matrix& latent, double value = 0.0);

}  // namespace lmfcn
