#pragma once

// Instance partition into support vectors S, misclassified non-SVs Q and
// correctly classified non-SVs R, and the three anchor tables built from the
// distance matrix D.
//
//   type 1 (A, per s in S): j != s, j not in S, same label as s, j correctly classified
//   type 2 (M, per q in Q): j in S, j != q
//   type 3 (G, per r in R): j in R, label differs from r
//
// Ineligible candidates are masked out rather than assigned a sentinel
// distance. Rows hold the k nearest eligible indices in ascending distance;
// equal distances keep ascending index order. Rows are shorter than k when
// candidates run out.

#include <span>
#include <vector>

#include "lmfcn/tensor.hpp"

namespace lmfcn {

struct InstancePartition {
  std::vector<std::size_t> support;        // S
  std::vector<std::size_t> misclassified;  // Q
  std::vector<std::size_t> correct;        // R
  std::vector<int> labels;                 // o^t
  std::vector<int> predictions;            // y^t
  std::size_t misclassified_support = 0;   // SVs that are also misclassified (kept in S)
};

using AnchorTable = std::vector<std::vector<std::size_t>>;

struct AnchorTables {
  AnchorTable type1;  // A, one row per entry of S
  AnchorTable type2;  // M, one row per entry of Q
  AnchorTable type3;  // G, one row per entry of R
  std::size_t empty_type1_rows = 0;
  std::size_t empty_type3_rows = 0;
};

/// Q = {i not in S : prediction != label}, R = everything else outside S.
/// `support` must be sorted and within [0, n).
InstancePartition partition_instances(std::span<const int> labels, std::span<const int> predictions,
                            std::span<const std::size_t> support);

AnchorTable type1_anchors(const Matrix& dist, const InstancePartition& part, std::size_t sv_close);

/// Throws ParameterError when S is empty.
AnchorTable type2_anchors(const Matrix& dist, const InstancePartition& part, std::size_t wr_close);

AnchorTable type3_anchors(const Matrix& dist, const InstancePartition& part, std::size_t sh_close);

AnchorTables build_anchor_tables(const Matrix& dist, const InstancePartition& part, std::size_t sv_close,
                                 std::size_t wr_close, std::size_t sh_close);

}  // namespace lmfcn
