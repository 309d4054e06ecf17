// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vge/tensor.hpp"

namespace vge {

/// Directed kNN interaction graph over agents. Edge (i, j) means agent i
/// selected agent j; mask[i*n+j] mirrors the edge list.
struct InteractionGraph {
  std::int64_t n_real = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;  // (src, dst)
  std::vector<std::uint8_t> mask;                            // n_real x n_real

  bool mask_at(std::int64_t i, std::int64_t j) const {
    return mask[static_cast<std::size_t>(i * n_real + j)] != 0;
  }
};

/// Base graph plus V virtual hub nodes with complete bipartite
/// real<->virtual connectivity (no virtual-virtual edges). Virtual node v
/// has flat index n_real + v.
struct AugmentedGraph {
  InteractionGraph base;
  std::int64_t n_virtual = 0;

  std::int64_t total_nodes() const { return base.n_real + n_virtual; }
};

/// L = D - A over the symmetrized unit-weight support of a graph.
struct LaplacianMatrix {
  std::int64_t n = 0;
  std::vector<double> values;  // row-major n x n

  double at(std::int64_t i, std::int64_t j) const {
    return values[static_cast<std::size_t>(i * n + j)];
  }
};

/// Each node gets directed edges to its min(k, N-1) most cosine-similar
/// other nodes; ties break toward the lower index. Any similarity
/// involving a zero-norm embedding is -inf and such candidates are never
/// selected.
InteractionGraph knn_graph(const Tensor& embeddings, std::int64_t k);

LaplacianMatrix laplacian(const InteractionGraph& g);
LaplacianMatrix laplacian(const AugmentedGraph& g);

/// Moore-Penrose resistance R_ij = (e_i - e_j)^T L+ (e_i - e_j), computed
/// by symmetric eigendecomposition with a 1e-10 eigenvalue cutoff.
/// Throws DisconnectedError when i and j are in different components.
double effective_resistance(const InteractionGraph& g, std::int64_t i, std::int64_t j);
double effective_resistance(const AugmentedGraph& g, std::int64_t i, std::int64_t j);

/// Precomputed pseudoinverse for repeated pair queries on one graph.
class ResistanceSolver {
 public:
  explicit ResistanceSolver(const LaplacianMatrix& lap);

  /// Resistance, or throws DisconnectedError.
  double resistance(std::int64_t i, std::int64_t j) const;
  bool connected(std::int64_t i, std::int64_t j) const;

 private:
  std::int64_t n_ = 0;
  std::vector<double> pinv_;       // row-major n x n
  std::vector<int> component_;     // component id per node
};

/// Requires V >= 1 (ContractError otherwise). The base graph is copied
/// untouched.
AugmentedGraph augment_with_virtual(const InteractionGraph& g, std::int64_t v_count);

struct ResistanceRow {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::optional<double> r_before;       // empty when (i, j) disconnected in the base
  double r_after = 0;                   // hubs connect everything
  std::optional<double> reduction_pct;  // 100 * (1 - after/before)
};

/// All unordered real pairs, resistance before and after augmenting with
/// `v_count` virtual hubs.
std::vector<ResistanceRow> resistance_report(const InteractionGraph& g,
                                             std::int64_t v_count);

/// CSV with header `i,j,r_before,r_after,reduction_pct`; disconnected
/// pairs leave r_before and reduction_pct empty.
std::string resistance_report_csv(const std::vector<ResistanceRow>& rows);

}  // namespace vge
