// SPDX-License-Identifier: Apache-2.0
#include "vge/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vge/csv.hpp"
#include "vge/errors.hpp"

namespace vge {

namespace {
constexpr double kEigCutoff = 1e-10;
}

InteractionGraph knn_graph(const Tensor& embeddings, std::int64_t k) {
  if (embeddings.rank() != 2)
    throw ShapeError("knn_graph: need [N,D] embeddings, got " + shape_str(embeddings.shape()));
  if (k < 0) throw ContractError("knn_graph: k must be >= 0");
  const std::int64_t n = embeddings.dim(0), d = embeddings.dim(1);

  std::vector<double> norms(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::int64_t c = 0; c < d; ++c) {
      const double v = embeddings.at({i, c});
      s += v * v;
    }
    norms[static_cast<std::size_t>(i)] = std::sqrt(s);
  }

  InteractionGraph g;
  g.n_real = n;
  g.mask.assign(static_cast<std::size_t>(n * n), 0);

  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::int64_t>> candidates;
    candidates.reserve(static_cast<std::size_t>(n - 1));
    for (std::int64_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double sim;
      if (norms[static_cast<std::size_t>(i)] == 0.0 || norms[static_cast<std::size_t>(j)] == 0.0) {
        sim = neg_inf;
      } else {
        double dot = 0;
        for (std::int64_t c = 0; c < d; ++c)
          dot += embeddings.at({i, c}) * embeddings.at({j, c});
        sim = dot / (norms[static_cast<std::size_t>(i)] * norms[static_cast<std::size_t>(j)]);
      }
      candidates.emplace_back(sim, j);
    }
    // Descending similarity, ties toward the lower index.
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    const auto limit = static_cast<std::size_t>(std::min<std::int64_t>(k, n - 1));
    for (std::size_t c = 0; c < candidates.size() && c < limit; ++c) {
      if (candidates[c].first == neg_inf) break;  // never select a zero-norm candidate
      g.edges.emplace_back(i, candidates[c].second);
      g.mask[static_cast<std::size_t>(i * n + candidates[c].second)] = 1;
    }
  }
  return g;
}

namespace {

LaplacianMatrix laplacian_impl(std::int64_t n,
                               const std::vector<std::pair<std::int64_t, std::int64_t>>& directed,
                               std::int64_t n_virtual) {
  const std::int64_t total = n + n_virtual;
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(total * total), 0);
  auto connect = [&](std::int64_t a, std::int64_t b) {
    if (a == b) return;
    adj[static_cast<std::size_t>(a * total + b)] = 1;
    adj[static_cast<std::size_t>(b * total + a)] = 1;
  };
  for (const auto& [s, t] : directed) connect(s, t);
  for (std::int64_t v = 0; v < n_virtual; ++v)
    for (std::int64_t r = 0; r < n; ++r) connect(r, n + v);

  LaplacianMatrix lap;
  lap.n = total;
  lap.values.assign(static_cast<std::size_t>(total * total), 0.0);
  for (std::int64_t i = 0; i < total; ++i) {
    double deg = 0;
    for (std::int64_t j = 0; j < total; ++j) {
      if (adj[static_cast<std::size_t>(i * total + j)]) {
        deg += 1.0;
        lap.values[static_cast<std::size_t>(i * total + j)] = -1.0;
      }
    }
    lap.values[static_cast<std::size_t>(i * total + i)] = deg;
  }
  return lap;
}

}  // namespace

LaplacianMatrix laplacian(const InteractionGraph& g) {
  return laplacian_impl(g.n_real, g.edges, 0);
}

LaplacianMatrix laplacian(const AugmentedGraph& g) {
  return laplacian_impl(g.base.n_real, g.base.edges, g.n_virtual);
}

ResistanceSolver::ResistanceSolver(const LaplacianMatrix& lap) : n_(lap.n) {
  // Connected components from the Laplacian's off-diagonal support.
  component_.assign(static_cast<std::size_t>(n_), -1);
  int comp = 0;
  std::vector<std::int64_t> stack;
  for (std::int64_t s = 0; s < n_; ++s) {
    if (component_[static_cast<std::size_t>(s)] >= 0) continue;
    stack.push_back(s);
    component_[static_cast<std::size_t>(s)] = comp;
    while (!stack.empty()) {
      const std::int64_t u = stack.back();
      stack.pop_back();
      for (std::int64_t v = 0; v < n_; ++v) {
        if (v != u && lap.at(u, v) != 0.0 && component_[static_cast<std::size_t>(v)] < 0) {
          component_[static_cast<std::size_t>(v)] = comp;
          stack.push_back(v);
        }
      }
    }
    ++comp;
  }

  // Moore-Penrose pseudoinverse via symmetric eigendecomposition,
  // dropping eigenvalues below the cutoff.
  Eigen::MatrixXd m(n_, n_);
  for (std::int64_t i = 0; i < n_; ++i)
    for (std::int64_t j = 0; j < n_; ++j) m(i, j) = lap.at(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const auto& vals = eig.eigenvalues();
  const auto& vecs = eig.eigenvectors();
  Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(n_, n_);
  for (std::int64_t e = 0; e < n_; ++e) {
    if (vals(e) > kEigCutoff)
      pinv += (1.0 / vals(e)) * vecs.col(e) * vecs.col(e).transpose();
  }
  pinv_.resize(static_cast<std::size_t>(n_ * n_));
  for (std::int64_t i = 0; i < n_; ++i)
    for (std::int64_t j = 0; j < n_; ++j)
      pinv_[static_cast<std::size_t>(i * n_ + j)] = pinv(i, j);
}

bool ResistanceSolver::connected(std::int64_t i, std::int64_t j) const {
  return component_[static_cast<std::size_t>(i)] == component_[static_cast<std::size_t>(j)];
}

double ResistanceSolver::resistance(std::int64_t i, std::int64_t j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_)
    throw ContractError("resistance: node index out of range");
  if (i == j) return 0.0;
  if (!connected(i, j))
    throw DisconnectedError("nodes " + std::to_string(i) + " and " + std::to_string(j) +
                            " are in different components");
  const auto ii = static_cast<std::size_t>(i * n_ + i);
  const auto jj = static_cast<std::size_t>(j * n_ + j);
  const auto ij = static_cast<std::size_t>(i * n_ + j);
  return pinv_[ii] + pinv_[jj] - 2.0 * pinv_[ij];
}

double effective_resistance(const InteractionGraph& g, std::int64_t i, std::int64_t j) {
  return ResistanceSolver(laplacian(g)).resistance(i, j);
}

double effective_resistance(const AugmentedGraph& g, std::int64_t i, std::int64_t j) {
  return ResistanceSolver(laplacian(g)).resistance(i, j);
}

AugmentedGraph augment_with_virtual(const InteractionGraph& g, std::int64_t v_count) {
  if (v_count < 1) throw ContractError("augment_with_virtual: V must be >= 1");
  return AugmentedGraph{g, v_count};
}

std::vector<ResistanceRow> resistance_report(const InteractionGraph& g,
                                             std::int64_t v_count) {
  AugmentedGraph aug = augment_with_virtual(g, v_count);
  ResistanceSolver before(laplacian(g));
  ResistanceSolver after(laplacian(aug));

  std::vector<ResistanceRow> rows;
  for (std::int64_t i = 0; i < g.n_real; ++i) {
    for (std::int64_t j = i + 1; j < g.n_real; ++j) {
      ResistanceRow row;
      row.i = i;
      row.j = j;
      row.r_after = after.resistance(i, j);
      if (before.connected(i, j)) {
        row.r_before = before.resistance(i, j);
        row.reduction_pct = 100.0 * (1.0 - row.r_after / *row.r_before);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string resistance_report_csv(const std::vector<ResistanceRow>& rows) {
  std::ostringstream out;
  out << "i,j,r_before,r_after,reduction_pct\n";
  for (const auto& r : rows) {
    out << r.i << ',' << r.j << ',';
    if (r.r_before) out << fmt_double(*r.r_before);
    out << ',' << fmt_double(r.r_after) << ',';
    if (r.reduction_pct) out << fmt_double(*r.reduction_pct);
    out << '\n';
  }
  return out.str();
}

}  // namespace vge
