#pragma once

// Large-margin loss over latent vectors. Live rows come from the current
// differentiable forward pass; anchor rows are read from the frozen latent
// matrix T and never receive gradient.
//
//   L_sv = sum_i sum_j ||f_i - t_{A_ij}||^2 / |S|
//   L_mc = sum_i sum_j ||f_i - t_{M_ij}||^2 / |Q|
//   L_cc = |R| / sum_i sum_j ||f_i - t_{G_ij}||^2
//   L    = L_sv + L_mc + L_cc

#include <cstddef>

#include "lmfcn/anchors.hpp"
#include "lmfcn/tensor.hpp"

namespace lmfcn {

inline constexpr double kMinCcDenominator = 1e-12;

struct LossTerm {
  double value = 0.0;
  Matrix grad;  // one row per live row; empty when the term is inactive
  bool clamped = false;
};

/// Throws ParameterError when S is empty.
LossTerm loss_sv(const Matrix& live, const Matrix& frozen, const AnchorTable& table);

/// Empty Q yields exactly 0 with no gradient.
LossTerm loss_mc(const Matrix& live, const Matrix& frozen, const AnchorTable& table);

/// Exactly 0 when the table is empty or every row is empty. A denominator
/// below kMinCcDenominator is clamped (value |R| / 1e-12, zero gradient).
LossTerm loss_cc(const Matrix& live, const Matrix& frozen, const AnchorTable& table);

struct LossBreakdown {
  double l_sv = 0.0;
  double l_mc = 0.0;
  double l_cc = 0.0;
  double total = 0.0;
  std::size_t n_sv = 0;
  std::size_t n_q = 0;
  std::size_t n_r = 0;
  std::size_t sv_close = 0;
  std::size_t wr_close = 0;
  std::size_t sh_close = 0;
};

LossBreakdown total_loss(double l_sv, double l_mc, double l_cc);

}  // namespace lmfcn
