// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include <vge/encoders.hpp>
#include <vge/errors.hpp>
#include <vge/fdcheck.hpp>
#include <vge/graph.hpp>
#include <vge/ops.hpp>

#include "test_util.hpp"

using namespace vge;

namespace {

struct Fixture {
  ParameterStore store;
  BoundParams bound;

  explicit Fixture(std::int64_t t_obs = 4, std::int64_t d = 8, std::int64_t v = 2,
                   std::uint64_t seed = 5) {
    RngStream rng(seed);
    register_encoder_params(store, t_obs, d, v, rng);
    bound = BoundParams::bind(store);
  }
};

InteractionGraph empty_graph(std::int64_t n) {
  InteractionGraph g;
  g.n_real = n;
  g.mask.assign(static_cast<std::size_t>(n * n), 0);
  return g;
}

InteractionGraph full_graph(std::int64_t n) {
  InteractionGraph g = empty_graph(n);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j)
      if (i != j) {
        g.edges.emplace_back(i, j);
        g.mask[static_cast<std::size_t>(i * n + j)] = 1;
      }
  return g;
}

Scene tiny_scene(std::int64_t n, std::int64_t t_obs, std::int64_t t_pred,
                 std::uint64_t seed, double noise = 0.2) {
  RngStream rng(seed);
  SyntheticSpec spec;
  spec.scenario = Scenario::ConstantVelocity;
  spec.n_agents = n;
  spec.noise_std = noise;
  spec.t_obs = t_obs;
  spec.t_pred = t_pred;
  return generate_synthetic(spec, rng).front();
}

}  // namespace

TEST_CASE("embed_nodes is shared across agents") {
  Fixture fx;
  Scene s = tiny_scene(2, 4, 2, 3);
  // Duplicate agent 0's track into agent 1.
  for (std::int64_t f = 0; f < 4; ++f)
    for (std::int64_t c = 0; c < 2; ++c)
      s.observed.at({1, f, c}) = s.observed.at({0, f, c});
  auto nodes = embed_nodes(fx.bound, build_input_features(s));
  CHECK(nodes.embeddings.shape() == Shape{2, 8});
  for (std::int64_t c = 0; c < 8; ++c)
    CHECK(nodes.embeddings.at({0, c}) == nodes.embeddings.at({1, c}));
}

TEST_CASE("embed_nodes weight gradients check out") {
  Fixture fx;
  Scene s = tiny_scene(3, 4, 2, 7);
  auto feats = build_input_features(s);
  Tensor w0 = fx.store.at("embed.W1").value;
  const double err = finite_difference_check(
      [&](const Tensor& w) {
        BoundParams b = fx.bound;
        b.set("embed.W1", w);
        return ops::mean_reduce(embed_nodes(b, feats).embeddings);
      },
      w0, 1e-5);
  CHECK(err < 1e-5);
}

TEST_CASE("relational encoder isolation under an all-false mask") {
  Fixture fx;
  RngStream rng(11);
  NodeState nodes{test::random_tensor({3, 8}, rng)};
  auto out = relational_encode(fx.bound, nodes, empty_graph(3));

  // Each agent only sees itself; recompute agent 1 alone and compare.
  NodeState solo{ops::gather_rows(nodes.embeddings, std::vector<std::int64_t>{1})};
  auto solo_out = relational_encode(fx.bound, solo, empty_graph(1));
  for (std::int64_t c = 0; c < 8; ++c)
    CHECK(out.embeddings.at({1, c}) ==
          doctest::Approx(solo_out.embeddings.at({0, c})).epsilon(1e-12));
}

TEST_CASE("relational encoder permutation equivariance") {
  Fixture fx;
  RngStream rng(13);
  NodeState nodes{test::random_tensor({4, 8}, rng)};
  InteractionGraph g = empty_graph(4);
  auto connect = [&](std::int64_t a, std::int64_t b) {
    g.edges.emplace_back(a, b);
    g.mask[static_cast<std::size_t>(a * 4 + b)] = 1;
  };
  connect(0, 1);
  connect(1, 2);
  connect(3, 0);
  auto base = relational_encode(fx.bound, nodes, g);

  const std::vector<std::int64_t> perm = {2, 0, 3, 1};  // new index -> old index
  NodeState pnodes{ops::gather_rows(nodes.embeddings, perm)};
  InteractionGraph pg = empty_graph(4);
  std::vector<std::int64_t> inv(4);
  for (std::int64_t i = 0; i < 4; ++i) inv[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;
  for (const auto& [a, b] : g.edges) {
    pg.edges.emplace_back(inv[static_cast<std::size_t>(a)], inv[static_cast<std::size_t>(b)]);
    pg.mask[static_cast<std::size_t>(inv[static_cast<std::size_t>(a)] * 4 + inv[static_cast<std::size_t>(b)])] = 1;
  }
  auto permuted = relational_encode(fx.bound, pnodes, pg);
  for (std::int64_t i = 0; i < 4; ++i)
    for (std::int64_t c = 0; c < 8; ++c)
      CHECK(permuted.embeddings.at({i, c}) ==
            doctest::Approx(base.embeddings.at({perm[static_cast<std::size_t>(i)], c}))
                .epsilon(1e-11));
}

TEST_CASE("relational encoder symmetry for identical agents under a full mask") {
  Fixture fx;
  RngStream rng(17);
  Tensor row = test::random_tensor({1, 8}, rng);
  Tensor all = ops::gather_rows(row, std::vector<std::int64_t>{0, 0, 0});
  auto out = relational_encode(fx.bound, NodeState{all}, full_graph(3));
  for (std::int64_t i = 1; i < 3; ++i)
    for (std::int64_t c = 0; c < 8; ++c)
      CHECK(out.embeddings.at({i, c}) == doctest::Approx(out.embeddings.at({0, c})).epsilon(1e-12));
}

TEST_CASE("virtual node bank init") {
  Fixture fx;
  const Tensor& base = fx.bound["vnode.base"];

  // Eval mode returns the base embeddings exactly.
  Tensor eval_nodes = init_virtual_nodes(fx.bound, 0.5, false, nullptr);
  for (std::int64_t i = 0; i < eval_nodes.numel(); ++i)
    CHECK(eval_nodes.data()[static_cast<std::size_t>(i)] ==
          base.data()[static_cast<std::size_t>(i)]);

  // Train mode draw is reproducible for a fixed stream.
  RngStream r1(42), r2(42);
  Tensor t1 = init_virtual_nodes(fx.bound, 0.5, true, &r1);
  Tensor t2 = init_virtual_nodes(fx.bound, 0.5, true, &r2);
  bool differs = false;
  for (std::int64_t i = 0; i < t1.numel(); ++i) {
    CHECK(t1.data()[static_cast<std::size_t>(i)] == t2.data()[static_cast<std::size_t>(i)]);
    differs |= t1.data()[static_cast<std::size_t>(i)] != base.data()[static_cast<std::size_t>(i)];
  }
  CHECK(differs);

  // Orthogonal init: zero pairwise cosine similarity.
  for (std::int64_t a = 0; a < base.dim(0); ++a)
    for (std::int64_t b = a + 1; b < base.dim(0); ++b) {
      double dot = 0;
      for (std::int64_t c = 0; c < base.dim(1); ++c) dot += base.at({a, c}) * base.at({b, c});
      CHECK(std::abs(dot) < 1e-12);
    }
}

TEST_CASE("real_to_virtual invariance and degenerate cases") {
  Fixture fx;
  RngStream rng(19);
  Tensor virt = init_virtual_nodes(fx.bound, 0, false, nullptr);
  NodeState nodes{test::random_tensor({5, 8}, rng)};

  Tensor out = real_to_virtual(fx.bound, virt, nodes, AggregatorKind::Attention);
  CHECK(out.shape() == Shape{2, 8});

  // Permutation invariance over agents.
  NodeState shuffled{ops::gather_rows(nodes.embeddings, std::vector<std::int64_t>{4, 2, 0, 3, 1})};
  Tensor out2 = real_to_virtual(fx.bound, virt, shuffled, AggregatorKind::Attention);
  for (std::int64_t i = 0; i < out.numel(); ++i)
    CHECK(out.data()[static_cast<std::size_t>(i)] ==
          doctest::Approx(out2.data()[static_cast<std::size_t>(i)]).epsilon(1e-12));

  // N=1: the sole agent carries full attention weight; identical agents
  // produce the same aggregate as a single copy of that agent.
  NodeState one{ops::gather_rows(nodes.embeddings, std::vector<std::int64_t>{0})};
  NodeState clones{ops::gather_rows(nodes.embeddings, std::vector<std::int64_t>{0, 0, 0})};
  Tensor o1 = real_to_virtual(fx.bound, virt, one, AggregatorKind::Attention);
  Tensor o3 = real_to_virtual(fx.bound, virt, clones, AggregatorKind::Attention);
  for (std::int64_t i = 0; i < o1.numel(); ++i)
    CHECK(o1.data()[static_cast<std::size_t>(i)] ==
          doctest::Approx(o3.data()[static_cast<std::size_t>(i)]).epsilon(1e-12));

  // Mean aggregator agrees with attention when all agents are identical
  // (uniform weights over equal logits).
  Tensor om = real_to_virtual(fx.bound, virt, clones, AggregatorKind::Mean);
  for (std::int64_t i = 0; i < o3.numel(); ++i)
    CHECK(om.data()[static_cast<std::size_t>(i)] ==
          doctest::Approx(o3.data()[static_cast<std::size_t>(i)]).epsilon(1e-11));
}

TEST_CASE("virtual_to_real broadcast and invariance") {
  Fixture fx(4, 8, 1);
  RngStream rng(23);
  NodeState nodes{test::random_tensor({3, 8}, rng)};

  // V=1: every agent receives the same virtual message.
  Tensor virt = init_virtual_nodes(fx.bound, 0, false, nullptr);
  CHECK(virt.dim(0) == 1);
  NodeState out = virtual_to_real(fx.bound, nodes, virt, AggregatorKind::Attention);
  CHECK(out.embeddings.shape() == Shape{3, 8});

  Fixture fx2(4, 8, 3, 6);
  Tensor v3 = init_virtual_nodes(fx2.bound, 0, false, nullptr);
  NodeState a = virtual_to_real(fx2.bound, nodes, v3, AggregatorKind::Attention);
  Tensor v3_perm = ops::gather_rows(v3, std::vector<std::int64_t>{2, 0, 1});
  NodeState b = virtual_to_real(fx2.bound, nodes, v3_perm, AggregatorKind::Attention);
  for (std::int64_t i = 0; i < a.embeddings.numel(); ++i)
    CHECK(a.embeddings.data()[static_cast<std::size_t>(i)] ==
          doctest::Approx(b.embeddings.data()[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("two-stage virtual pass gradient check") {
  Fixture fx;
  Scene s = tiny_scene(3, 4, 2, 29);
  auto feats = build_input_features(s);
  Tensor w0 = fx.store.at("rv.U1").value;
  const double err = finite_difference_check(
      [&](const Tensor& w) {
        BoundParams b = fx.bound;
        b.set("rv.U1", w);
        NodeState nodes = embed_nodes(b, feats);
        Tensor virt = init_virtual_nodes(b, 0, false, nullptr);
        virt = real_to_virtual(b, virt, nodes, AggregatorKind::Attention);
        NodeState high = virtual_to_real(b, nodes, virt, AggregatorKind::Attention);
        return ops::mean_reduce(ops::multiply(high.embeddings, high.embeddings));
      },
      w0, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("one-hop expert edge cases") {
  Fixture fx;
  Scene s = tiny_scene(3, 4, 2, 31);
  NodeState nodes = embed_nodes(fx.bound, build_input_features(s));

  // Isolated nodes: aggregate is the zero vector, update still applies.
  InteractionGraph iso = empty_graph(3);
  Tensor efeat = edge_features(fx.bound, s, iso);
  CHECK(efeat.dim(0) == 0);
  NodeState out = one_hop_expert(fx.bound, nodes, iso, efeat);
  CHECK(out.embeddings.shape() == Shape{3, 8});
  CHECK(out.embeddings.all_finite());

  // Two identical agents with symmetric edges produce identical outputs.
  Scene s2 = tiny_scene(2, 4, 2, 37);
  for (std::int64_t f = 0; f < 4; ++f)
    for (std::int64_t c = 0; c < 2; ++c)
      s2.observed.at({1, f, c}) = s2.observed.at({0, f, c});
  NodeState pairn = embed_nodes(fx.bound, build_input_features(s2));
  InteractionGraph duo = full_graph(2);
  NodeState duo_out = one_hop_expert(fx.bound, pairn, duo, edge_features(fx.bound, s2, duo));
  for (std::int64_t c = 0; c < 8; ++c)
    CHECK(duo_out.embeddings.at({0, c}) ==
          doctest::Approx(duo_out.embeddings.at({1, c})).epsilon(1e-12));
}

TEST_CASE("one-hop expert permutation equivariance") {
  Fixture fx;
  Scene s = tiny_scene(4, 4, 2, 41);
  NodeState nodes = embed_nodes(fx.bound, build_input_features(s));
  InteractionGraph g = knn_graph(nodes.embeddings, 2);
  NodeState base = one_hop_expert(fx.bound, nodes, g, edge_features(fx.bound, s, g));

  const std::vector<std::int64_t> perm = {3, 1, 0, 2};
  Scene ps = s;
  ps.observed = Tensor::zeros(Shape{4, 4, 2});
  ps.future = Tensor::zeros(Shape{4, 2, 2});
  for (std::int64_t i = 0; i < 4; ++i)
    for (std::int64_t f = 0; f < 4; ++f)
      for (std::int64_t c = 0; c < 2; ++c)
        ps.observed.at({i, f, c}) = s.observed.at({perm[static_cast<std::size_t>(i)], f, c});
  NodeState pnodes = embed_nodes(fx.bound, build_input_features(ps));
  InteractionGraph pg = knn_graph(pnodes.embeddings, 2);
  NodeState pout = one_hop_expert(fx.bound, pnodes, pg, edge_features(fx.bound, ps, pg));
  for (std::int64_t i = 0; i < 4; ++i)
    for (std::int64_t c = 0; c < 8; ++c)
      CHECK(pout.embeddings.at({i, c}) ==
            doctest::Approx(base.embeddings.at({perm[static_cast<std::size_t>(i)], c}))
                .epsilon(1e-10));
}

TEST_CASE("edge features are a function of pair geometry") {
  Fixture fx;
  Scene s = tiny_scene(2, 4, 2, 43);
  InteractionGraph duo = full_graph(2);
  Tensor e1 = edge_features(fx.bound, s, duo);

  Scene shifted = apply_transform(s, TransformRecord{10.0, -4.0});
  Tensor e2 = edge_features(fx.bound, shifted, duo);
  for (std::int64_t i = 0; i < e1.numel(); ++i)
    CHECK(e1.data()[static_cast<std::size_t>(i)] ==
          doctest::Approx(e2.data()[static_cast<std::size_t>(i)]).epsilon(1e-12));
}
