#include "lmfcn/loss.hpp"

#include "lmfcn/geometry.hpp"
#include "lmfcn/log.hpp"

namespace lmfcn {
namespace {

void check_shapes(const Matrix& live, const Matrix& frozen, const AnchorTable& table, const char* what) {
  if (static_cast<std::size_t>(live.rows()) != table.size()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(live.rows()) + " live rows for " +
                     std::to_string(table.size()) + " anchor rows");
  }
  if (live.rows() > 0 && live.cols() != frozen.cols()) throw ShapeError(std::string(what) + ": latent width mismatch");
  for (const auto& row : table) {
    for (std::size_t a : row) {
      if (a >= static_cast<std::size_t>(frozen.rows())) throw ShapeError(std::string(what) + ": anchor index out of range");
    }
  }
}

// Sum over rows and anchors of ||f_i - t_a||^2, with d/df_i = 2 sum_a (f_i - t_a).
double pull_sum(const Matrix& live, const Matrix& frozen, const AnchorTable& table, Matrix& grad) {
  grad = Matrix::Zero(live.rows(), live.cols());
  double sum = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto f = live.row(static_cast<Eigen::Index>(i));
    for (std::size_t a : table[i]) {
      const auto t = frozen.row(static_cast<Eigen::Index>(a));
      sum += sq_distance(f, t);
      grad.row(static_cast<Eigen::Index>(i)) += 2.0 * (f - t);
    }
  }
  return sum;
}

}  // namespace

LossTerm loss_sv(const Matrix& live, const Matrix& frozen, const AnchorTable& table) {
  if (table.empty()) throw ParameterError("loss_sv: no support vectors");
  check_shapes(live, frozen, table, "loss_sv");
  LossTerm t;
  const double inv = 1.0 / static_cast<double>(table.size());
  t.value = pull_sum(live, frozen, table, t.grad) * inv;
  t.grad *= inv;
  return t;
}

LossTerm loss_mc(const Matrix& live, const Matrix& frozen, const AnchorTable& table) {
  LossTerm t;
  if (table.empty()) return t;
  check_shapes(live, frozen, table, "loss_mc");
  const double inv = 1.0 / static_cast<double>(table.size());
  t.value = pull_sum(live, frozen, table, t.grad) * inv;
  t.grad *= inv;
  return t;
}

LossTerm loss_cc(const Matrix& live, const Matrix& frozen, const AnchorTable& table) {
  LossTerm t;
  bool any = false;
  for (const auto& row : table) any = any || !row.empty();
  if (!any) return t;
  check_shapes(live, frozen, table, "loss_cc");
  const double count = static_cast<double>(table.size());
  const double denom = pull_sum(live, frozen, table, t.grad);
  if (denom < kMinCcDenominator) {
    log_warning("loss_cc: opposite-class anchors coincide with their instances; clamping denominator");
    t.value = count / kMinCcDenominator;
    t.grad.setZero();
    t.clamped = true;
    return t;
  }
  t.value = count / denom;
  t.grad *= -count / (denom * denom);
  return t;
}

LossBreakdown total_loss(double l_sv, double l_mc, double l_cc) {
  LossBreakdown b;
  b.l_sv = l_sv;
  b.l_mc = l_mc;
  b.l_cc = l_cc;
  b.total = l_sv + l_mc + l_cc;
  return b;
}

}  // namespace lmfcn
