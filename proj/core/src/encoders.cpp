// SPDX-License-Identifier: Apache-2.0
#include "vge/encoders.hpp"

#include <cmath>

#include "vge/errors.hpp"
#include "vge/ops.hpp"

namespace vge {

using ops::add;
using ops::concat_last_axis;
using ops::gelu;
using ops::layernorm_last_axis;
using ops::linear;
using ops::matmul;
using ops::multiply;
using ops::reshape;
using ops::scale;
using ops::softmax_last_axis;
using ops::transpose;

namespace {

constexpr double kMaskBlock = -1e30;

Tensor mlp2(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
            const Tensor& b2) {
  return linear(gelu(linear(x, w1, b1)), w2, b2);
}

/// Scaled dot-product attention of `queries` over `keys`/`values`; an
/// optional additive bias masks out disallowed pairs.
Tensor attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                 const Tensor* bias) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(queries.dim(1)));
  Tensor scores = scale(matmul(queries, transpose(keys)), inv_sqrt_d);
  if (bias) scores = add(scores, *bias);
  return matmul(softmax_last_axis(scores), values);
}

/// Row-mean of `values` replicated to `out_rows` rows, as a single matmul
/// with a constant averaging matrix.
Tensor mean_rows(const Tensor& values, std::int64_t out_rows) {
  const std::int64_t n = values.dim(0);
  Tensor avg = Tensor::full(Shape{out_rows, n}, 1.0 / static_cast<double>(n));
  return matmul(avg, values);
}

}  // namespace

AggregatorKind aggregator_from_string(const std::string& name) {
  if (name == "attention") return AggregatorKind::Attention;
  if (name == "mean") return AggregatorKind::Mean;
  throw ContractError("unknown aggregator: " + name);
}

std::string aggregator_to_string(AggregatorKind k) {
  return k == AggregatorKind::Attention ? "attention" : "mean";
}

void register_encoder_params(ParameterStore& store, std::int64_t t_obs,
                             std::int64_t d, std::int64_t v_count, RngStream& rng) {
  auto mlp = [&](const std::string& prefix, std::int64_t in) {
    store.add(prefix + ".W1", xavier_init(in, d, rng));
    store.add(prefix + ".b1", Tensor::zeros(Shape{d}));
    store.add(prefix + ".W2", xavier_init(d, d, rng));
    store.add(prefix + ".b2", Tensor::zeros(Shape{d}));
  };
  mlp("embed", t_obs * 4);

  store.add("pair.Wq", xavier_init(d, d, rng));
  store.add("pair.Wk", xavier_init(d, d, rng));
  store.add("pair.Wv", xavier_init(d, d, rng));
  store.add("pair.Wo", xavier_init(d, d, rng));
  store.add("pair.bo", Tensor::zeros(Shape{d}));

  store.add("vnode.base", orthogonal_rows(v_count, d, rng));

  for (const std::string stage : {"rv", "vr"}) {
    store.add(stage + ".Wq", xavier_init(d, d, rng));
    store.add(stage + ".Wk", xavier_init(d, d, rng));
    store.add(stage + ".Wv", xavier_init(d, d, rng));
    store.add(stage + ".U1", xavier_init(2 * d, d, rng));
    store.add(stage + ".c1", Tensor::zeros(Shape{d}));
    store.add(stage + ".U2", xavier_init(d, d, rng));
    store.add(stage + ".c2", Tensor::zeros(Shape{d}));
  }

  mlp("edge", 5);
  mlp("onehop.msg", 3 * d);
  mlp("onehop.upd", 2 * d);
}

NodeState embed_nodes(const BoundParams& p, const FeatureTensor& features) {
  const std::int64_t n = features.values.dim(0);
  const std::int64_t t = features.values.dim(1);
  Tensor flat = reshape(features.values, Shape{n, t * 4});
  return NodeState{mlp2(flat, p["embed.W1"], p["embed.b1"], p["embed.W2"], p["embed.b2"])};
}

PairEmbedding relational_encode(const BoundParams& p, const NodeState& nodes,
                                const InteractionGraph& graph) {
  const Tensor& n = nodes.embeddings;
  const std::int64_t count = n.dim(0);
  if (graph.n_real != count)
    throw ShapeError("relational_encode: mask is " + std::to_string(graph.n_real) +
                     " nodes, embeddings are " + shape_str(n.shape()));

  Tensor bias = Tensor::zeros(Shape{count, count});
  for (std::int64_t i = 0; i < count; ++i)
    for (std::int64_t j = 0; j < count; ++j)
      if (i != j && !graph.mask_at(i, j)) bias.at({i, j}) = kMaskBlock;

  Tensor ctx = attention(matmul(n, p["pair.Wq"]), matmul(n, p["pair.Wk"]),
                         matmul(n, p["pair.Wv"]), &bias);
  Tensor proj = linear(ctx, p["pair.Wo"], p["pair.bo"]);
  return PairEmbedding{layernorm_last_axis(add(n, proj))};
}

Tensor init_virtual_nodes(const BoundParams& p, double perturb_std, bool train_mode,
                          RngStream* rng) {
  const Tensor& base = p["vnode.base"];
  if (!train_mode || perturb_std <= 0 || rng == nullptr) return base;
  Tensor noise = Tensor::zeros(base.shape());
  for (auto& v : noise.data()) v = perturb_std * rng->normal();
  return add(base, noise);
}

Tensor real_to_virtual(const BoundParams& p, const Tensor& virtual_nodes,
                       const NodeState& nodes, AggregatorKind agg) {
  const Tensor& n = nodes.embeddings;
  Tensor values = matmul(n, p["rv.Wv"]);
  Tensor aggregated =
      agg == AggregatorKind::Attention
          ? attention(matmul(virtual_nodes, p["rv.Wq"]), matmul(n, p["rv.Wk"]), values, nullptr)
          : mean_rows(values, virtual_nodes.dim(0));
  Tensor update = mlp2(concat_last_axis(virtual_nodes, aggregated), p["rv.U1"], p["rv.c1"],
                       p["rv.U2"], p["rv.c2"]);
  return add(virtual_nodes, update);
}

NodeState virtual_to_real(const BoundParams& p, const NodeState& nodes,
                          const Tensor& virtual_nodes, AggregatorKind agg) {
  const Tensor& n = nodes.embeddings;
  Tensor values = matmul(virtual_nodes, p["vr.Wv"]);
  Tensor aggregated =
      agg == AggregatorKind::Attention
          ? attention(matmul(n, p["vr.Wq"]), matmul(virtual_nodes, p["vr.Wk"]), values, nullptr)
          : mean_rows(values, n.dim(0));
  Tensor update = mlp2(concat_last_axis(n, aggregated), p["vr.U1"], p["vr.c1"], p["vr.U2"],
                       p["vr.c2"]);
  return NodeState{gelu(layernorm_last_axis(add(n, update)))};
}

Tensor edge_features(const BoundParams& p, const Scene& scene,
                     const InteractionGraph& graph) {
  const auto e_count = static_cast<std::int64_t>(graph.edges.size());
  const std::int64_t t = scene.t_obs();
  // Geometry of the sender relative to the receiver at the last observed
  // frame; the receiver of edge (src, dst) is src, which pulls from its
  // selected neighbor dst.
  Tensor geo = Tensor::zeros(Shape{e_count, 5});
  for (std::int64_t e = 0; e < e_count; ++e) {
    const auto [recv, send] = graph.edges[static_cast<std::size_t>(e)];
    const double dx = scene.observed.at({send, t - 1, 0}) - scene.observed.at({recv, t - 1, 0});
    const double dy = scene.observed.at({send, t - 1, 1}) - scene.observed.at({recv, t - 1, 1});
    auto disp = [&](std::int64_t a, int axis) {
      return scene.observed.at({a, t - 1, axis}) - scene.observed.at({a, t - 2, axis});
    };
    geo.at({e, 0}) = dx;
    geo.at({e, 1}) = dy;
    geo.at({e, 2}) = std::sqrt(dx * dx + dy * dy);
    geo.at({e, 3}) = disp(send, 0) - disp(recv, 0);
    geo.at({e, 4}) = disp(send, 1) - disp(recv, 1);
  }
  return mlp2(geo, p["edge.W1"], p["edge.b1"], p["edge.W2"], p["edge.b2"]);
}

NodeState one_hop_expert(const BoundParams& p, const NodeState& nodes,
                         const InteractionGraph& graph, const Tensor& edge_feats) {
  const Tensor& n = nodes.embeddings;
  const std::int64_t count = n.dim(0);
  const auto e_count = static_cast<std::int64_t>(graph.edges.size());
  if (edge_feats.dim(0) != e_count)
    throw ShapeError("one_hop_expert: " + std::to_string(e_count) + " edges but " +
                     std::to_string(edge_feats.dim(0)) + " edge features");

  std::vector<std::int64_t> receivers(static_cast<std::size_t>(e_count));
  std::vector<std::int64_t> senders(static_cast<std::size_t>(e_count));
  std::vector<double> in_degree(static_cast<std::size_t>(count), 0.0);
  for (std::int64_t e = 0; e < e_count; ++e) {
    receivers[static_cast<std::size_t>(e)] = graph.edges[static_cast<std::size_t>(e)].first;
    senders[static_cast<std::size_t>(e)] = graph.edges[static_cast<std::size_t>(e)].second;
    in_degree[static_cast<std::size_t>(receivers[static_cast<std::size_t>(e)])] += 1.0;
  }

  Tensor msg_in = concat_last_axis(ops::gather_rows(n, receivers),
                                   ops::gather_rows(n, senders), edge_feats);
  Tensor messages = mlp2(msg_in, p["onehop.msg.W1"], p["onehop.msg.b1"],
                         p["onehop.msg.W2"], p["onehop.msg.b2"]);
  Tensor sums = ops::scatter_add_rows(messages, receivers, count);

  const std::int64_t d = n.dim(1);
  Tensor inv_deg = Tensor::zeros(Shape{count, d});
  for (std::int64_t i = 0; i < count; ++i) {
    const double deg = in_degree[static_cast<std::size_t>(i)];
    if (deg > 0)
      for (std::int64_t c = 0; c < d; ++c) inv_deg.at({i, c}) = 1.0 / deg;
  }
  Tensor mean_msg = multiply(sums, inv_deg);

  return NodeState{mlp2(concat_last_axis(n, mean_msg), p["onehop.upd.W1"],
                        p["onehop.upd.b1"], p["onehop.upd.W2"], p["onehop.upd.b2"])};
}

}  // namespace vge
