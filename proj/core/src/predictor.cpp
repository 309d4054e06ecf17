// SPDX-License-Identifier: Apache-2.0
#include "vge/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vge/errors.hpp"
#include "vge/ops.hpp"

namespace vge {

using ops::add;
using ops::concat_last_axis;
using ops::gelu;
using ops::l2_norm;
using ops::linear;
using ops::matmul;
using ops::mean_reduce;
using ops::multiply;
using ops::reshape;
using ops::scale;

void register_decoder_params(ParameterStore& store, std::int64_t d, std::int64_t k_heads,
                             std::int64_t t_pred, RngStream& rng) {
  for (std::int64_t k = 0; k < k_heads; ++k) {
    const std::string prefix = "dec." + std::to_string(k);
    store.add(prefix + ".W1", xavier_init(3 * d, d, rng));
    store.add(prefix + ".b1", Tensor::zeros(Shape{d}));
    store.add(prefix + ".W2", xavier_init(d, t_pred * 2, rng));
    store.add(prefix + ".b2", Tensor::zeros(Shape{t_pred * 2}));
  }
}

PredictionSet decode(const BoundParams& p, const NodeState& base,
                     const PairEmbedding& pair, const Tensor& routed,
                     std::int64_t k_heads, std::int64_t t_pred,
                     const Tensor& last_observed) {
  if (base.embeddings.shape() != pair.embeddings.shape() ||
      base.embeddings.shape() != routed.shape())
    throw ShapeError("decode: feature shapes disagree, " + shape_str(base.embeddings.shape()) +
                     " vs " + shape_str(pair.embeddings.shape()) + " vs " +
                     shape_str(routed.shape()));
  if (k_heads < 1) throw ContractError("decode: K must be >= 1");

  const std::int64_t n = base.embeddings.dim(0);
  const std::int64_t flat = t_pred * 2;
  Tensor features = concat_last_axis(base.embeddings, pair.embeddings, routed);

  // Displacements become absolute positions through one constant
  // lower-triangular accumulation matrix plus the last-observed anchor.
  Tensor cumsum = Tensor::zeros(Shape{flat, flat});
  for (std::int64_t src_t = 0; src_t < t_pred; ++src_t)
    for (std::int64_t dst_t = src_t; dst_t < t_pred; ++dst_t)
      for (std::int64_t c = 0; c < 2; ++c)
        cumsum.at({src_t * 2 + c, dst_t * 2 + c}) = 1.0;

  Tensor anchor = Tensor::zeros(Shape{n, flat});
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t t = 0; t < t_pred; ++t)
      for (std::int64_t c = 0; c < 2; ++c)
        anchor.at({i, t * 2 + c}) = last_observed.at({i, c});

  PredictionSet out;
  out.k_heads = k_heads;
  out.n_agents = n;
  out.t_pred = t_pred;
  out.head_tape.reserve(static_cast<std::size_t>(k_heads));
  out.trajectories = Tensor::zeros(Shape{k_heads, n, t_pred, 2});
  for (std::int64_t k = 0; k < k_heads; ++k) {
    const std::string prefix = "dec." + std::to_string(k);
    Tensor hidden = gelu(linear(features, p[prefix + ".W1"], p[prefix + ".b1"]));
    Tensor disp = linear(hidden, p[prefix + ".W2"], p[prefix + ".b2"]);
    Tensor abs_flat = add(matmul(disp, cumsum), anchor);
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t t = 0; t < t_pred; ++t)
        for (std::int64_t c = 0; c < 2; ++c)
          out.trajectories.at({k, i, t, c}) = abs_flat.at({i, t * 2 + c});
    out.head_tape.push_back(std::move(abs_flat));
  }
  return out;
}

Tensor min_l2_loss(PredictionSet& preds, const Tensor& future) {
  const std::int64_t n = preds.n_agents;
  const std::int64_t t = preds.t_pred;
  if (future.rank() != 3 || future.dim(0) != n || future.dim(1) != t || future.dim(2) != 2)
    throw ShapeError("min_l2_loss: future shape " + shape_str(future.shape()) +
                     " does not match predictions [" + std::to_string(n) + "," +
                     std::to_string(t) + ",2]");
  if (preds.head_tape.empty())
    throw ContractError("min_l2_loss: prediction set has no decoder outputs");

  Tensor future_flat(Shape{n, t * 2},
                     std::vector<double>(future.data().begin(), future.data().end()));
  Tensor ones_t = Tensor::full(Shape{t, 1}, 1.0);

  // Per head: [N,1] column of summed per-step distances.
  std::vector<Tensor> head_err;
  head_err.reserve(preds.head_tape.size());
  for (const auto& head : preds.head_tape) {
    Tensor diff = ops::sub(head, future_flat);
    Tensor dists = l2_norm(reshape(diff, Shape{n * t, 2}));        // [N*t, 1]
    head_err.push_back(matmul(reshape(dists, Shape{n, t}), ones_t));  // [N, 1]
  }

  preds.head_losses.assign(preds.head_tape.size(), 0.0);
  for (std::size_t k = 0; k < head_err.size(); ++k) {
    double sum = 0;
    for (double v : head_err[k].data()) sum += v;
    preds.head_losses[k] = sum / static_cast<double>(n * t);
  }

  // The best head per agent, picked on values; only that head's error
  // enters the loss, so only it receives gradient for the agent.
  std::vector<std::int64_t> winner(static_cast<std::size_t>(n), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < head_err.size(); ++k) {
      const double e = head_err[k].at({i, 0});
      if (e < best) {
        best = e;
        winner[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(k);
      }
    }
  }

  Tensor total;
  bool first = true;
  for (std::size_t k = 0; k < head_err.size(); ++k) {
    Tensor mask = Tensor::zeros(Shape{n, 1});
    bool any = false;
    for (std::int64_t i = 0; i < n; ++i) {
      if (winner[static_cast<std::size_t>(i)] == static_cast<std::int64_t>(k)) {
        mask.at({i, 0}) = 1.0;
        any = true;
      }
    }
    if (!any) continue;
    Tensor term = multiply(head_err[k], mask);
    total = first ? term : add(total, term);
    first = false;
  }
  return scale(mean_reduce(total), 1.0 / static_cast<double>(t));
}

LossBreakdown total_loss(const Tensor& pred_tape, const Tensor& imp_tape, double lambda) {
  LossBreakdown out;
  out.lambda = lambda;
  out.pred_tape = pred_tape;
  out.imp_tape = imp_tape;
  out.total_tape = add(pred_tape, scale(imp_tape, lambda));
  out.pred_loss = pred_tape.item();
  out.imp_loss = imp_tape.item();
  out.total = out.total_tape.item();
  return out;
}

Metrics min_ade_fde(const PredictionSet& preds, const Tensor& future, std::int64_t k) {
  if (k < 1 || k > preds.k_heads)
    throw ContractError("min_ade_fde: k = " + std::to_string(k) + " with K = " +
                        std::to_string(preds.k_heads));
  const std::int64_t n = preds.n_agents;
  const std::int64_t t = preds.t_pred;
  if (future.rank() != 3 || future.dim(0) != n || future.dim(1) != t || future.dim(2) != 2)
    throw ShapeError("min_ade_fde: future shape " + shape_str(future.shape()));

  double ade_sum = 0, fde_sum = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    double best_ade = std::numeric_limits<double>::infinity();
    double best_fde = std::numeric_limits<double>::infinity();
    for (std::int64_t h = 0; h < k; ++h) {
      double acc = 0, final_d = 0;
      for (std::int64_t f = 0; f < t; ++f) {
        const double dx = preds.trajectories.at({h, i, f, 0}) - future.at({i, f, 0});
        const double dy = preds.trajectories.at({h, i, f, 1}) - future.at({i, f, 1});
        const double d = std::sqrt(dx * dx + dy * dy);
        acc += d;
        if (f == t - 1) final_d = d;
      }
      best_ade = std::min(best_ade, acc / static_cast<double>(t));
      best_fde = std::min(best_fde, final_d);
    }
    ade_sum += best_ade;
    fde_sum += best_fde;
  }
  return Metrics{ade_sum / static_cast<double>(n), fde_sum / static_cast<double>(n)};
}

}  // namespace vge
