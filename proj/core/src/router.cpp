// SPDX-License-Identifier: Apache-2.0
#include "vge/router.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vge/csv.hpp"
#include "vge/errors.hpp"
#include "vge/ops.hpp"

namespace vge {

using ops::add;
using ops::matmul;
using ops::multiply;
using ops::softmax_last_axis;

void register_router_params(ParameterStore& store, std::int64_t hidden_dim) {
  // Zero init: a fresh router gates [0.5, 0.5] for every agent.
  store.add("router.W_g", Tensor::zeros(Shape{hidden_dim, kNumExperts}));
  store.add("router.W_n", Tensor::zeros(Shape{hidden_dim, kNumExperts}));
}

RouterOutput gate(const BoundParams& p, const NodeState& nodes, bool train_mode,
                  bool noise_enabled, RngStream* rng) {
  const Tensor& n = nodes.embeddings;
  Tensor logits = matmul(n, p["router.W_g"]);
  if (train_mode && noise_enabled && rng != nullptr) {
    Tensor eps = Tensor::zeros(Shape{n.dim(0), kNumExperts});
    for (auto& v : eps.data()) v = rng->normal();
    logits = add(logits, multiply(eps, ops::softplus(matmul(n, p["router.W_n"]))));
  }
  Tensor probs = softmax_last_axis(logits);

  RouterOutput out;
  out.gates.resize(static_cast<std::size_t>(n.dim(0)));
  for (std::int64_t i = 0; i < n.dim(0); ++i) {
    auto& g = out.gates[static_cast<std::size_t>(i)];
    for (int e = 0; e < kNumExperts; ++e)
      g.probs[static_cast<std::size_t>(e)] = probs.at({i, e});
  }
  out.probs = std::move(probs);
  return out;
}

ActiveSet top_p_select(const std::array<double, kNumExperts>& probs, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractError("top_p_select: p must be in (0,1)");

  std::array<int, kNumExperts> order{};
  for (int i = 0; i < kNumExperts; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
  });

  // Prefix positions with cumulative mass <= p, plus the first position
  // that pushes the cumulative mass past p.
  ActiveSet s;
  double cum = 0;
  for (int k = 0; k < kNumExperts; ++k) {
    cum += probs[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    s.members[static_cast<std::size_t>(s.count++)] = order[static_cast<std::size_t>(k)];
    if (cum > p) break;
  }
  return s;
}

std::array<double, kNumExperts> renormalize(const std::array<double, kNumExperts>& probs,
                                            const ActiveSet& s) {
  if (s.count < 1) throw ContractError("renormalize: active set must be nonempty");
  double sum = 0;
  for (int i = 0; i < s.count; ++i) sum += probs[static_cast<std::size_t>(s.members[static_cast<std::size_t>(i)])];
  std::array<double, kNumExperts> out{};
  for (int i = 0; i < s.count; ++i) {
    const int e = s.members[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(e)] = probs[static_cast<std::size_t>(e)] / sum;
  }
  return out;
}

void select_and_renormalize(std::vector<GateDistribution>& gates, double p) {
  for (auto& g : gates) {
    std::array<int, kNumExperts> order{};
    for (int i = 0; i < kNumExperts; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return g.probs[static_cast<std::size_t>(a)] > g.probs[static_cast<std::size_t>(b)];
    });
    g.sorted_order = order;
    g.active = top_p_select(g.probs, p);
    g.renorm = renormalize(g.probs, g.active);
  }
}

Tensor fuse(const Tensor& probs, const std::vector<GateDistribution>& gates,
            const NodeState& one_hop_out, const NodeState& high_out) {
  const std::int64_t n = one_hop_out.embeddings.dim(0);
  const std::int64_t d = one_hop_out.embeddings.dim(1);
  if (high_out.embeddings.shape() != one_hop_out.embeddings.shape())
    throw ShapeError("fuse: expert shapes " + shape_str(one_hop_out.embeddings.shape()) +
                     " and " + shape_str(high_out.embeddings.shape()));

  // For both-active agents the renormalized weights equal the gate probs
  // themselves (softmax rows sum to 1), so those rows stay differentiable
  // through `probs`. Single-expert agents get an exact constant one-hot.
  Tensor both_mask = Tensor::zeros(Shape{n, kNumExperts});
  Tensor single_hot = Tensor::zeros(Shape{n, kNumExperts});
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& g = gates[static_cast<std::size_t>(i)];
    if (g.active.count == kNumExperts) {
      for (int e = 0; e < kNumExperts; ++e) both_mask.at({i, e}) = 1.0;
    } else {
      single_hot.at({i, g.active.members[0]}) = 1.0;
    }
  }
  Tensor weights = add(multiply(probs, both_mask), single_hot);

  Tensor col0 = Tensor::zeros(Shape{kNumExperts, 1});
  col0.at({0, 0}) = 1.0;
  Tensor col1 = Tensor::zeros(Shape{kNumExperts, 1});
  col1.at({1, 0}) = 1.0;
  Tensor ones_row = Tensor::full(Shape{1, d}, 1.0);

  Tensor w_one = matmul(matmul(weights, col0), ones_row);   // [N, D]
  Tensor w_high = matmul(matmul(weights, col1), ones_row);  // [N, D]
  return add(multiply(w_one, one_hop_out.embeddings),
             multiply(w_high, high_out.embeddings));
}

Tensor importance_loss(const Tensor& probs) {
  const std::int64_t n = probs.dim(0);
  Tensor ones_col = Tensor::full(Shape{kNumExperts, 1}, 1.0);
  Tensor mean = ops::scale(matmul(probs, ones_col), 1.0 / kNumExperts);  // [N,1]
  Tensor mean_bc = matmul(mean, Tensor::full(Shape{1, kNumExperts}, 1.0));
  Tensor dev = ops::sub(probs, mean_bc);
  Tensor std_dev = ops::scale(ops::l2_norm(dev), 1.0 / std::sqrt(double(kNumExperts)));

  // 1/(mean + eps) enters as a constant: softmax rows sum to one, so the
  // mean is invariant along every parameter direction and contributes no
  // gradient.
  Tensor inv_denom = Tensor::zeros(Shape{n, 1});
  for (std::int64_t i = 0; i < n; ++i)
    inv_denom.at({i, 0}) = 1.0 / (mean.at({i, 0}) + 1e-8);

  return ops::mean_reduce(multiply(std_dev, inv_denom));
}

std::string gates_csv(const std::vector<GateRow>& rows) {
  std::ostringstream out;
  out << "scene_id,agent_id,g_onehop,g_high,active_set\n";
  for (const auto& r : rows) {
    out << r.scene_id << ',' << r.agent_id << ','
        << fmt_double(r.gate.probs[kExpertOneHop]) << ','
        << fmt_double(r.gate.probs[kExpertHighOrder]) << ',';
    std::array<int, kNumExperts> members{};
    for (int i = 0; i < r.gate.active.count; ++i)
      members[static_cast<std::size_t>(i)] = r.gate.active.members[static_cast<std::size_t>(i)];
    std::sort(members.begin(), members.begin() + r.gate.active.count);
    for (int i = 0; i < r.gate.active.count; ++i) {
      if (i) out << ';';
      out << members[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace vge
