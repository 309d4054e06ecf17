// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include <vge/errors.hpp>
#include <vge/fdcheck.hpp>
#include <vge/model.hpp>
#include <vge/ops.hpp>

#include "test_util.hpp"

using namespace vge;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.t_obs = 8;
  cfg.t_pred = 12;
  cfg.k_neighbors = 2;
  cfg.hidden_dim = 8;
  cfg.virtual_count = 2;
  cfg.heads = 3;
  cfg.noise_enabled = false;
  cfg.perturb_std = 0.0;
  return cfg;
}

Scene mixed_scene(std::int64_t n, std::uint64_t seed) {
  RngStream rng(seed);
  SyntheticSpec spec;
  spec.scenario = Scenario::Crossing;
  spec.n_agents = n;
  spec.noise_std = 0.1;
  return generate_synthetic(spec, rng).front();
}

/// Forward with every parameter sliced out of one packed column, so the
/// packed column's tape gradient covers the whole model at once.
Tensor packed_loss(const TrajectoryModel& model, const Scene& scene, const Tensor& packed) {
  BoundParams bound;
  for (const auto& [name, span] : model.params().layout()) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(span.second));
    for (std::int64_t i = 0; i < span.second; ++i) idx[static_cast<std::size_t>(i)] = span.first + i;
    Tensor slice = ops::gather_rows(packed, idx);
    bound.set(name, ops::reshape(slice, model.params().at(name).value.shape()));
  }
  return model.forward_bound(scene, bound, /*train_mode=*/false, nullptr).loss.total_tape;
}

}  // namespace

TEST_CASE("forward runs and stays finite on degenerate scenes") {
  TrajectoryModel model(small_config(), 1);

  // Single stationary agent flows through both experts without error.
  RngStream rng(2);
  Scene s = test::random_scene(1, 8, 12, rng);
  for (std::int64_t f = 0; f < 8; ++f) {
    s.observed.at({0, f, 0}) = 1.5;
    s.observed.at({0, f, 1}) = -0.5;
  }
  for (std::int64_t f = 0; f < 12; ++f) {
    s.future.at({0, f, 0}) = 1.5;
    s.future.at({0, f, 1}) = -0.5;
  }
  auto fwd = model.forward(s, false, nullptr);
  CHECK(std::isfinite(fwd.loss.total));
  CHECK(fwd.predictions.trajectories.all_finite());
  CHECK(fwd.gates.size() == 1);

  Scene busy = mixed_scene(5, 3);
  auto fwd2 = model.forward(busy, false, nullptr);
  CHECK(std::isfinite(fwd2.loss.total));
  CHECK(fwd2.loss.total == fwd2.loss.pred_loss + fwd2.loss.lambda * fwd2.loss.imp_loss);
}

TEST_CASE("every parameter receives a finite gradient in train mode") {
  ModelConfig cfg = small_config();
  cfg.noise_enabled = true;  // the noise path is what reaches router.W_n
  cfg.perturb_std = 0.1;
  TrajectoryModel model(cfg, 7);
  Scene s = mixed_scene(4, 11);

  Tape tape;
  RngStream noise(99);
  auto fwd = model.forward(s, true, &noise);
  auto grads = tape.backward(fwd.loss.total_tape);
  CHECK(grads.size() == model.params().size());
  for (const auto& [name, g] : grads) {
    CAPTURE(name);
    CHECK(g.all_finite());
  }
  // The live path should move most parameters; spot check a few.
  auto norm1 = [&](const std::string& n) {
    double sum = 0;
    for (double v : grads.at(n).data()) sum += std::abs(v);
    return sum;
  };
  CHECK(norm1("embed.W1") > 0);
  CHECK(norm1("router.W_g") > 0);
  CHECK(norm1("vnode.base") > 0);
  CHECK(norm1("onehop.msg.W1") > 0);
}

TEST_CASE("full-pipeline gradient matches finite differences") {
  TrajectoryModel model(small_config(), 21);
  Scene s = mixed_scene(4, 17);
  Tensor packed = model.params().pack();
  const double err = finite_difference_check(
      [&](const Tensor& x) { return packed_loss(model, s, x); }, packed, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("agent permutation equivariance of the full forward pass") {
  TrajectoryModel model(small_config(), 5);
  RngStream seeds(1234);
  for (int trial = 0; trial < 10; ++trial) {
    Scene s = mixed_scene(5, seeds.next_u64());
    auto base = model.forward(s, false, nullptr);

    std::vector<std::int64_t> perm = {4, 0, 3, 1, 2};
    Scene p = s;
    p.observed = Tensor::zeros(s.observed.shape());
    p.future = Tensor::zeros(s.future.shape());
    p.agent_ids.assign(5, 0);
    for (std::int64_t i = 0; i < 5; ++i) {
      p.agent_ids[static_cast<std::size_t>(i)] =
          s.agent_ids[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      for (std::int64_t f = 0; f < 8; ++f)
        for (std::int64_t c = 0; c < 2; ++c)
          p.observed.at({i, f, c}) = s.observed.at({perm[static_cast<std::size_t>(i)], f, c});
      for (std::int64_t f = 0; f < 12; ++f)
        for (std::int64_t c = 0; c < 2; ++c)
          p.future.at({i, f, c}) = s.future.at({perm[static_cast<std::size_t>(i)], f, c});
    }
    auto permuted = model.forward(p, false, nullptr);

    double max_dev = 0;
    for (std::int64_t h = 0; h < 3; ++h)
      for (std::int64_t i = 0; i < 5; ++i)
        for (std::int64_t f = 0; f < 12; ++f)
          for (std::int64_t c = 0; c < 2; ++c)
            max_dev = std::max(max_dev,
                               std::abs(permuted.predictions.trajectories.at({h, i, f, c}) -
                                        base.predictions.trajectories.at(
                                            {h, perm[static_cast<std::size_t>(i)], f, c})));
    CHECK(max_dev < 1e-9);
    CHECK(std::abs(base.loss.total - permuted.loss.total) < 1e-9);
  }
}

TEST_CASE("translation equivariance of predictions and invariance of losses") {
  TrajectoryModel model(small_config(), 6);
  RngStream seeds(555);
  for (int trial = 0; trial < 10; ++trial) {
    Scene s = mixed_scene(4, seeds.next_u64());
    auto base = model.forward(s, false, nullptr);
    const TransformRecord shift{12.25, -7.5};
    Scene moved = apply_transform(s, shift);
    auto shifted = model.forward(moved, false, nullptr);

    double max_dev = 0;
    for (std::int64_t i = 0; i < base.predictions.trajectories.numel(); i += 2) {
      max_dev = std::max(max_dev,
                         std::abs(shifted.predictions.trajectories.data()[static_cast<std::size_t>(i)] -
                                  base.predictions.trajectories.data()[static_cast<std::size_t>(i)] -
                                  shift.dx));
      max_dev = std::max(max_dev,
                         std::abs(shifted.predictions.trajectories.data()[static_cast<std::size_t>(i + 1)] -
                                  base.predictions.trajectories.data()[static_cast<std::size_t>(i + 1)] -
                                  shift.dy));
    }
    CHECK(max_dev < 1e-9);
    CHECK(std::abs(base.loss.total - shifted.loss.total) < 1e-9);

    Metrics m0 = min_ade_fde(base.predictions, s.future, 3);
    Metrics m1 = min_ade_fde(shifted.predictions, moved.future, 3);
    CHECK(std::abs(m0.min_ade - m1.min_ade) < 1e-9);
    CHECK(std::abs(m0.min_fde - m1.min_fde) < 1e-9);
  }
}

TEST_CASE("forward determinism") {
  ModelConfig cfg = small_config();
  cfg.noise_enabled = true;
  TrajectoryModel model(cfg, 9);
  Scene s = mixed_scene(4, 77);

  auto a = model.forward(s, false, nullptr);
  auto b = model.forward(s, false, nullptr);
  CHECK(a.loss.total == b.loss.total);

  RngStream n1(31), n2(31);
  auto t1 = model.forward(s, true, &n1);
  auto t2 = model.forward(s, true, &n2);
  CHECK(t1.loss.total == t2.loss.total);

  RngStream n3(32);
  auto t3 = model.forward(s, true, &n3);
  CHECK(t3.loss.total != t1.loss.total);  // different noise draw
}

TEST_CASE("scene window mismatch is rejected") {
  TrajectoryModel model(small_config(), 2);
  RngStream rng(8);
  Scene bad = test::random_scene(2, 6, 12, rng);
  CHECK_THROWS_AS(model.forward(bad, false, nullptr), ContractError);
}

TEST_CASE("model config validation") {
  ModelConfig cfg = small_config();
  cfg.top_p = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = small_config();
  cfg.virtual_count = 100;  // exceeds hidden_dim
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = small_config();
  cfg.t_obs = 1;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
}
