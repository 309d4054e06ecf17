// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "vge/graph.hpp"
#include "vge/params.hpp"
#include "vge/rng.hpp"
#include "vge/scene.hpp"
#include "vge/tensor.hpp"

namespace vge {

/// [N, D] hidden vectors, one per agent.
struct NodeState {
  Tensor embeddings;
};

/// [N, D] masked-attention pair embeddings.
struct PairEmbedding {
  Tensor embeddings;
};

enum class AggregatorKind { Attention, Mean };
AggregatorKind aggregator_from_string(const std::string& name);
std::string aggregator_to_string(AggregatorKind k);

/// Registers the weights of every encoder stage under the prefixes
/// embed.*, pair.*, vnode.*, rv.*, vr.*, edge.*, onehop.*.
void register_encoder_params(ParameterStore& store, std::int64_t t_obs,
                             std::int64_t hidden_dim, std::int64_t v_count,
                             RngStream& rng);

/// Shared 2-layer MLP over the flattened per-agent [t_obs x 4] input.
NodeState embed_nodes(const BoundParams& p, const FeatureTensor& features);

/// Single-layer scaled dot-product attention where agent i attends over
/// {j : mask[i][j]} plus itself, then residual + layernorm.
PairEmbedding relational_encode(const BoundParams& p, const NodeState& nodes,
                                const InteractionGraph& graph);

/// Virtual-node bank: learnable base embeddings plus a train-time
/// Gaussian perturbation of std `perturb_std`; eval mode returns the base
/// embeddings exactly.
Tensor init_virtual_nodes(const BoundParams& p, double perturb_std,
                          bool train_mode, RngStream* rng);

/// Stage 1: each virtual node aggregates over all real nodes, then a
/// residual update MLP. Permutation-invariant over agents.
Tensor real_to_virtual(const BoundParams& p, const Tensor& virtual_nodes,
                       const NodeState& nodes, AggregatorKind agg);

/// Stage 2: each real node aggregates over the updated virtual nodes,
/// residual update MLP, then layernorm then GELU, in that order.
NodeState virtual_to_real(const BoundParams& p, const NodeState& nodes,
                          const Tensor& virtual_nodes, AggregatorKind agg);

/// Per-edge geometry features from the last observed frame:
/// MLP([dx, dy, |d|, dr_x, dr_y]) of sender relative to receiver. [E, D].
Tensor edge_features(const BoundParams& p, const Scene& scene,
                     const InteractionGraph& graph);

/// Message MLP over (receiver, sender, edge) per edge, mean aggregation
/// over each node's incoming edges (zero vector when there are none),
/// update MLP over (node, aggregate).
NodeState one_hop_expert(const BoundParams& p, const NodeState& nodes,
                         const InteractionGraph& graph, const Tensor& edge_feats);

}  // namespace vge
