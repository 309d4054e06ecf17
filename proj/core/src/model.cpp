// SPDX-License-Identifier: Apache-2.0
#include "vge/model.hpp"

#include "vge/errors.hpp"
#include "vge/ops.hpp"

namespace vge {

void ModelConfig::validate() const {
  auto positive = [](std::int64_t v, const char* name) {
    if (v < 1) throw ContractError(std::string(name) + " must be >= 1");
  };
  positive(t_pred, "t_pred");
  positive(k_neighbors, "k_neighbors");
  positive(hidden_dim, "hidden_dim");
  positive(virtual_count, "virtual_count");
  positive(heads, "heads");
  if (t_obs < 2) throw ContractError("t_obs must be >= 2");
  if (!(top_p > 0.0 && top_p < 1.0)) throw ContractError("top_p must be in (0,1)");
  if (lambda < 0.0) throw ContractError("lambda must be >= 0");
  if (perturb_std < 0.0) throw ContractError("perturb_std must be >= 0");
  if (virtual_count > hidden_dim)
    throw ContractError("virtual_count must not exceed hidden_dim (orthogonal init)");
}

TrajectoryModel::TrajectoryModel(ModelConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  RngStream rng = RngStream::derive(init_seed, "init");
  register_encoder_params(params_, cfg_.t_obs, cfg_.hidden_dim, cfg_.virtual_count, rng);
  register_router_params(params_, cfg_.hidden_dim);
  register_decoder_params(params_, cfg_.hidden_dim, cfg_.heads, cfg_.t_pred, rng);
}

TrajectoryModel::Forward TrajectoryModel::forward(const Scene& scene, bool train_mode,
                                                  RngStream* noise_rng) const {
  return forward_bound(scene, BoundParams::bind(params_), train_mode, noise_rng);
}

TrajectoryModel::Forward TrajectoryModel::forward_bound(const Scene& scene,
                                                        const BoundParams& bound,
                                                        bool train_mode,
                                                        RngStream* noise_rng) const {
  if (scene.num_agents() < 1) throw ContractError("forward: scene has no agents");
  if (scene.t_obs() != cfg_.t_obs || scene.t_pred() != cfg_.t_pred)
    throw ContractError("forward: scene window " + std::to_string(scene.t_obs()) + "+" +
                        std::to_string(scene.t_pred()) + " does not match config " +
                        std::to_string(cfg_.t_obs) + "+" + std::to_string(cfg_.t_pred));

  auto [centered, back] = normalize_scene(scene);

  NodeState base = embed_nodes(bound, build_input_features(centered));
  InteractionGraph graph = knn_graph(base.embeddings, cfg_.k_neighbors);
  PairEmbedding pair = relational_encode(bound, base, graph);

  NodeState one_hop = one_hop_expert(bound, base, graph,
                                     edge_features(bound, centered, graph));

  Tensor virt = init_virtual_nodes(bound, cfg_.perturb_std, train_mode, noise_rng);
  virt = real_to_virtual(bound, virt, base, cfg_.aggregator);
  NodeState high = virtual_to_real(bound, base, virt, cfg_.aggregator);

  RouterOutput routing = gate(bound, base, train_mode, cfg_.noise_enabled, noise_rng);
  select_and_renormalize(routing.gates, cfg_.top_p);
  Tensor routed = fuse(routing.probs, routing.gates, one_hop, high);

  PredictionSet preds = decode(bound, base, pair, routed, cfg_.heads, cfg_.t_pred,
                               centered.last_observed());
  Tensor pred_loss = min_l2_loss(preds, centered.future);
  Tensor imp = importance_loss(routing.probs);

  Forward out;
  out.loss = total_loss(pred_loss, imp, cfg_.lambda);
  out.gates = std::move(routing.gates);
  out.graph = std::move(graph);

  // Back to world coordinates; detached values only.
  Tensor world = preds.trajectories.detached();
  {
    auto d = world.data();
    for (std::size_t i = 0; i < d.size(); i += 2) {
      d[i] += back.dx;
      d[i + 1] += back.dy;
    }
  }
  preds.trajectories = std::move(world);
  out.predictions = std::move(preds);
  return out;
}

Tensor TrajectoryModel::initial_embeddings(const Scene& scene) const {
  auto [centered, back] = normalize_scene(scene);
  (void)back;
  return embed_nodes(BoundParams::bind(params_), build_input_features(centered)).embeddings;
}

}  // namespace vge
