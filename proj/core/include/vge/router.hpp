// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vge/encoders.hpp"
#include "vge/params.hpp"
#include "vge/rng.hpp"
#include "vge/tensor.hpp"

namespace vge {

inline constexpr int kNumExperts = 2;
inline constexpr int kExpertOneHop = 0;
inline constexpr int kExpertHighOrder = 1;

/// Active expert subset of {one-hop, high-order}; 1 or 2 members, stored
/// in descending-probability order.
struct ActiveSet {
  std::array<int, kNumExperts> members{};
  int count = 0;

  bool contains(int expert) const {
    for (int i = 0; i < count; ++i)
      if (members[i] == expert) return true;
    return false;
  }
};

/// Per-agent routing state: softmax gate, descending sort order, Top-P
/// active set and renormalized weights.
struct GateDistribution {
  std::array<double, kNumExperts> probs{};
  std::array<int, kNumExperts> sorted_order{};
  ActiveSet active;
  std::array<double, kNumExperts> renorm{};
};

struct RouterOutput {
  Tensor probs;  // [N, 2], on tape
  std::vector<GateDistribution> gates;
};

void register_router_params(ParameterStore& store, std::int64_t hidden_dim);

/// logits = n W_g + eps (.) softplus(n W_n); eps is per-agent standard
/// Gaussian noise in train mode when enabled, zero otherwise. probs is
/// the softmax of the logits; gates carry only probs (selection is a
/// separate step).
RouterOutput gate(const BoundParams& p, const NodeState& nodes, bool train_mode,
                  bool noise_enabled, RngStream* rng);

/// Minimal descending-probability prefix whose cumulative mass exceeds p.
ActiveSet top_p_select(const std::array<double, kNumExperts>& probs, double p);

/// g_k / sum_{j in S} g_j inside S, zero outside.
std::array<double, kNumExperts> renormalize(const std::array<double, kNumExperts>& probs,
                                            const ActiveSet& s);

/// Fills active/renorm of every gate in place using threshold p.
void select_and_renormalize(std::vector<GateDistribution>& gates, double p);

/// Per-agent convex combination of the two expert outputs under the
/// renormalized weights. Differentiable through probs for agents with
/// both experts active; single-expert agents contribute the selected
/// expert's output exactly.
Tensor fuse(const Tensor& probs, const std::vector<GateDistribution>& gates,
            const NodeState& one_hop_out, const NodeState& high_out);

/// Mean over agents of Std(g_i) / (Mean(g_i) + 1e-8) with population
/// standard deviation over the 2 gate entries. Scalar on tape.
Tensor importance_loss(const Tensor& probs);

/// CSV with header `scene_id,agent_id,g_onehop,g_high,active_set`;
/// active_set is the selected expert indices joined by ';'.
struct GateRow {
  std::int64_t scene_id = 0;
  std::int64_t agent_id = 0;
  GateDistribution gate;
};
std::string gates_csv(const std::vector<GateRow>& rows);

}  // namespace vge
