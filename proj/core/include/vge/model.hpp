// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vge/encoders.hpp"
#include "vge/graph.hpp"
#include "vge/params.hpp"
#include "vge/predictor.hpp"
#include "vge/rng.hpp"
#include "vge/router.hpp"
#include "vge/scene.hpp"

namespace vge {

struct ModelConfig {
  std::int64_t t_obs = 8;
  std::int64_t t_pred = 12;
  std::int64_t k_neighbors = 4;
  std::int64_t hidden_dim = 64;
  std::int64_t virtual_count = 4;
  std::int64_t heads = 20;
  double top_p = 0.7;
  double lambda = 0.01;
  double perturb_std = 0.1;
  bool noise_enabled = true;
  AggregatorKind aggregator = AggregatorKind::Attention;

  void validate() const;  // ContractError on out-of-range values
};

/// The full predictor: shared node encoder, masked-attention pair
/// encoder, one-hop and virtual-graph high-order interaction experts, the
/// Top-P expert router, and a K-head trajectory decoder. Scenes are
/// mean-centered on the last observed frame internally and predictions
/// mapped back, so outputs are translation-equivariant.
class TrajectoryModel {
 public:
  TrajectoryModel(ModelConfig cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  struct Forward {
    LossBreakdown loss;
    PredictionSet predictions;  // world frame, detached
    std::vector<GateDistribution> gates;
    InteractionGraph graph;
  };

  /// Runs the pipeline on one scene. Records on the active tape when one
  /// exists (watching every parameter), otherwise evaluates detached.
  /// `noise_rng` drives gating noise and virtual-node perturbation and is
  /// only consumed in train mode.
  Forward forward(const Scene& scene, bool train_mode, RngStream* noise_rng) const;

  /// Same pipeline with externally supplied parameter tensors; the
  /// gradient-check harness slices these out of one packed column.
  Forward forward_bound(const Scene& scene, const BoundParams& bound,
                        bool train_mode, RngStream* noise_rng) const;

  /// Embeddings the interaction graph is built from (used by graph
  /// diagnostics to mirror the model's graph construction).
  Tensor initial_embeddings(const Scene& scene) const;

 private:
  ModelConfig cfg_;
  ParameterStore params_;
};

}  // namespace vge
