#include "lmfcn/anchors.hpp"

#include <algorithm>

namespace lmfcn {
namespace {

// k nearest of `candidates` (already in ascending index order) by dist row `query`.
std::vector<std::size_t> nearest(const Matrix& dist, std::size_t query, std::vector<std::size_t> candidates,
                                 std::size_t k) {
  const auto row = dist.row(static_cast<Eigen::Index>(query));
  const std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double da = row(static_cast<Eigen::Index>(a));
                      const double db = row(static_cast<Eigen::Index>(b));
                      return da < db || (da == db && a < b);
                    });
  candidates.resize(take);
  return candidates;
}

void check_dist(const Matrix& dist, const InstancePartition& part) {
  const auto n = static_cast<Eigen::Index>(part.labels.size());
  if (dist.rows() != n || dist.cols() != n) throw ShapeError("anchors: distance matrix does not match partition size");
}

}  // namespace

InstancePartition partition_instances(std::span<const int> labels, std::span<const int> predictions,
                            std::span<const std::size_t> support) {
  if (labels.size() != predictions.size()) throw ShapeError("partition_instances: labels and predictions differ in length");
  const std::size_t n = labels.size();
  std::vector<bool> is_sv(n, false);
  for (std::size_t s : support) {
    if (s >= n) throw ShapeError("partition_instances: support index out of range");
    is_sv[s] = true;
  }
  InstancePartition p;
  p.labels.assign(labels.begin(), labels.end());
  p.predictions.assign(predictions.begin(), predictions.end());
  for (std::size_t i = 0; i < n; ++i) {
    const bool wrong = predictions[i] != labels[i];
    if (is_sv[i]) {
      p.support.push_back(i);
      if (wrong) ++p.misclassified_support;
    } else if (wrong) {
      p.misclassified.push_back(i);
    } else {
      p.correct.push_back(i);
    }
  }
  return p;
}

AnchorTable type1_anchors(const Matrix& dist, const InstancePartition& part, std::size_t sv_close) {
  check_dist(dist, part);
  // Eligible anchors for any SV are the correctly classified non-SVs, i.e. R;
  // the label filter is applied per SV.
  AnchorTable table;
  table.reserve(part.support.size());
  for (std::size_t s : part.support) {
    std::vector<std::size_t> cand;
    for (std::size_t j : part.correct) {
      if (j != s && part.labels[j] == part.labels[s]) cand.push_back(j);
    }
    table.push_back(nearest(dist, s, std::move(cand), sv_close));
  }
  return table;
}

AnchorTable type2_anchors(const Matrix& dist, const InstancePartition& part, std::size_t wr_close) {
  check_dist(dist, part);
  if (part.support.empty()) throw ParameterError("type2_anchors: no support vectors");
  AnchorTable table;
  table.reserve(part.misclassified.size());
  for (std::size_t q : part.misclassified) {
    std::vector<std::size_t> cand;
    for (std::size_t s : part.support) {
      if (s != q) cand.push_back(s);
    }
    table.push_back(nearest(dist, q, std::move(cand), wr_close));
  }
  return table;
}

AnchorTable type3_anchors(const Matrix& dist, const InstancePartition& part, std::size_t sh_close) {
  check_dist(dist, part);
  AnchorTable table;
  if (sh_close == 0) return table;
  table.reserve(part.correct.size());
  for (std::size_t r : part.correct) {
    std::vector<std::size_t> cand;
    for (std::size_t j : part.correct) {
      if (part.labels[j] != part.labels[r]) cand.push_back(j);
    }
    table.push_back(nearest(dist, r, std::move(cand), sh_close));
  }
  return table;
}

AnchorTables build_anchor_tables(const Matrix& dist, const InstancePartition& part, std::size_t sv_close,
                                 std::size_t wr_close, std::size_t sh_close) {
  AnchorTables t;
  t.type1 = type1_anchors(dist, part, sv_close);
  t.type2 = type2_anchors(dist, part, wr_close);
  t.type3 = type3_anchors(dist, part, sh_close);
  for (const auto& row : t.type1) t.empty_type1_rows += row.empty() ? 1 : 0;
  for (const auto& row : t.type3) t.empty_type3_rows += row.empty() ? 1 : 0;
  return t;
}

}  // namespace lmfcn
