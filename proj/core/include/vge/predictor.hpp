// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "vge/encoders.hpp"
#include "vge/params.hpp"
#include "vge/tensor.hpp"

namespace vge {

/// K candidate trajectories per agent. head_tape keeps each head's
/// absolute positions on the tape ([N, t_pred*2] each) for the loss;
/// trajectories is the detached [K, N, t_pred, 2] stack.
struct PredictionSet {
  Tensor trajectories;
  std::vector<Tensor> head_tape;
  std::vector<double> head_losses;  // per-head mean displacement vs ground truth
  std::int64_t k_heads = 0;
  std::int64_t n_agents = 0;
  std::int64_t t_pred = 0;
};

struct LossBreakdown {
  double pred_loss = 0;
  double imp_loss = 0;
  double total = 0;
  double lambda = 0;
  Tensor total_tape;  // scalar on tape
  Tensor pred_tape;
  Tensor imp_tape;
};

struct Metrics {
  double min_ade = 0;
  double min_fde = 0;
};

void register_decoder_params(ParameterStore& store, std::int64_t hidden_dim,
                             std::int64_t k_heads, std::int64_t t_pred,
                             RngStream& rng);

/// K independent 2-layer MLP heads over [base; pair; routed] predicting
/// per-step displacements, accumulated from each agent's last observed
/// position into absolute coordinates.
PredictionSet decode(const BoundParams& p, const NodeState& base,
                     const PairEmbedding& pair, const Tensor& routed,
                     std::int64_t k_heads, std::int64_t t_pred,
                     const Tensor& last_observed);

/// (1/(N*t_pred)) sum_i min_k sum_t ||p_i^t - phat_i^{t,k}||; the min is
/// per agent over the head's whole-trajectory error, so only the best
/// head per agent receives gradient. `future` is [N, t_pred, 2].
/// head_losses of `preds` are filled as a side effect.
Tensor min_l2_loss(PredictionSet& preds, const Tensor& future);

/// total = pred + lambda * imp, composed on the tape.
LossBreakdown total_loss(const Tensor& pred_tape, const Tensor& imp_tape,
                         double lambda);

/// Best-of-k displacement metrics, min over heads taken independently for
/// ADE and FDE per agent, then averaged over agents. k <= K or
/// ContractError.
Metrics min_ade_fde(const PredictionSet& preds, const Tensor& future,
                    std::int64_t k);

}  // namespace vge
