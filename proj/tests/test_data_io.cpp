// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <vge/errors.hpp>
#include <vge/rng.hpp>
#include <vge/scene.hpp>

#include "test_util.hpp"

using namespace vge;

namespace {

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name, const std::string& contents) {
    path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::filesystem::remove(path); }
};

std::string track_lines(std::int64_t agents, std::int64_t frames) {
  std::string text;
  for (std::int64_t f = 0; f < frames; ++f)
    for (std::int64_t a = 0; a < agents; ++a)
      text += std::to_string(f * 10) + " " + std::to_string(a) + " " +
              std::to_string(0.5 * static_cast<double>(f) + static_cast<double>(a)) + " 1.0\n";
  return text;
}

}  // namespace

TEST_CASE("loader windows a single full track") {
  TempFile file("vge_one_agent.txt", track_lines(1, 20));
  auto scenes = load_trajectory_file(file.path, 8, 12, 20);
  REQUIRE(scenes.size() == 1);
  CHECK(scenes[0].num_agents() == 1);
  CHECK(scenes[0].t_obs() == 8);
  CHECK(scenes[0].t_pred() == 12);
  CHECK(scenes[0].frame_origin == 70.0);  // raw id of the 8th frame
}

TEST_CASE("agents with a gap are excluded from that window") {
  std::string text = track_lines(2, 20);
  // Remove agent 1's observation at frame index 10.
  std::string needle = "100 1 ";
  auto pos = text.find(needle);
  auto end = text.find('\n', pos);
  text.erase(pos, end - pos + 1);
  TempFile file("vge_gap.txt", text);
  auto scenes = load_trajectory_file(file.path, 8, 12, 20);
  REQUIRE(scenes.size() == 1);
  CHECK(scenes[0].num_agents() == 1);
  CHECK(scenes[0].agent_ids[0] == 0);
}

TEST_CASE("window count matches the sliding formula") {
  TempFile file("vge_windows.txt", track_lines(2, 40));
  auto scenes = load_trajectory_file(file.path, 8, 12, 1);
  CHECK(scenes.size() == 21);  // 40 - 20 + 1

  RngStream rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t frames = 20 + rng.uniform_int(0, 30);
    const std::int64_t stride = 1 + rng.uniform_int(0, 4);
    TempFile f2("vge_windows_fuzz.txt", track_lines(1, frames));
    auto got = load_trajectory_file(f2.path, 8, 12, stride);
    const auto expect = (frames - 20) / stride + 1;
    CHECK(static_cast<std::int64_t>(got.size()) == expect);
  }
}

TEST_CASE("loader failure modes") {
  TempFile bad("vge_bad.txt", "0 0 1.0 2.0\nnot numbers here\n");
  try {
    load_trajectory_file(bad.path, 8, 12, 1);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  TempFile small("vge_small.txt", track_lines(1, 5));
  CHECK_THROWS_AS(load_trajectory_file(small.path, 8, 12, 1), EmptyDataset);
}

TEST_CASE("loader is idempotent") {
  TempFile file("vge_idem.txt", track_lines(3, 25));
  auto a = load_trajectory_file(file.path, 8, 12, 2);
  auto b = load_trajectory_file(file.path, 8, 12, 2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].agent_ids == b[i].agent_ids);
    for (std::int64_t j = 0; j < a[i].observed.numel(); ++j)
      CHECK(a[i].observed.data()[static_cast<std::size_t>(j)] ==
            b[i].observed.data()[static_cast<std::size_t>(j)]);
  }
}

TEST_CASE("input features concatenate positions and displacements") {
  SyntheticSpec spec;
  spec.n_agents = 1;
  spec.t_obs = 3;
  spec.t_pred = 2;
  RngStream rng(1);
  Scene s = generate_synthetic(spec, rng).front();
  // Overwrite with the hand example (0,0),(1,0),(2,0).
  for (std::int64_t f = 0; f < 3; ++f) {
    s.observed.at({0, f, 0}) = static_cast<double>(f);
    s.observed.at({0, f, 1}) = 0.0;
  }
  auto feats = build_input_features(s);
  CHECK(feats.values.at({0, 0, 0}) == 0.0);
  CHECK(feats.values.at({0, 0, 2}) == 0.0);  // first-frame displacement is zero
  CHECK(feats.values.at({0, 1, 0}) == 1.0);
  CHECK(feats.values.at({0, 1, 2}) == 1.0);
  CHECK(feats.values.at({0, 2, 2}) == 1.0);

  // Stationary agent: every row [2,3,0,0].
  for (std::int64_t f = 0; f < 3; ++f) {
    s.observed.at({0, f, 0}) = 2.0;
    s.observed.at({0, f, 1}) = 3.0;
  }
  feats = build_input_features(s);
  for (std::int64_t f = 0; f < 3; ++f) {
    CHECK(feats.values.at({0, f, 0}) == 2.0);
    CHECK(feats.values.at({0, f, 1}) == 3.0);
    CHECK(feats.values.at({0, f, 2}) == 0.0);
    CHECK(feats.values.at({0, f, 3}) == 0.0);
  }
}

TEST_CASE("displacements reconstruct positions by cumulative sum") {
  RngStream rng(8);
  Scene s = test::random_scene(3, 8, 12, rng);
  auto feats = build_input_features(s);
  for (std::int64_t i = 0; i < 3; ++i) {
    double x = feats.values.at({i, 0, 0});
    double y = feats.values.at({i, 0, 1});
    for (std::int64_t f = 1; f < 8; ++f) {
      x += feats.values.at({i, f, 2});
      y += feats.values.at({i, f, 3});
      CHECK(x == doctest::Approx(s.observed.at({i, f, 0})).epsilon(1e-14));
      CHECK(y == doctest::Approx(s.observed.at({i, f, 1})).epsilon(1e-14));
    }
  }
}

TEST_CASE("feature translation covariance") {
  RngStream rng(17);
  Scene s = test::random_scene(2, 8, 12, rng);
  Scene shifted = apply_transform(s, TransformRecord{3.5, -2.0});
  auto f0 = build_input_features(s);
  auto f1 = build_input_features(shifted);
  for (std::int64_t i = 0; i < 2; ++i) {
    for (std::int64_t f = 0; f < 8; ++f) {
      CHECK(f1.values.at({i, f, 0}) == doctest::Approx(f0.values.at({i, f, 0}) + 3.5));
      CHECK(f1.values.at({i, f, 1}) == doctest::Approx(f0.values.at({i, f, 1}) - 2.0));
      CHECK(f1.values.at({i, f, 2}) == doctest::Approx(f0.values.at({i, f, 2})).epsilon(1e-12));
      CHECK(f1.values.at({i, f, 3}) == doctest::Approx(f0.values.at({i, f, 3})).epsilon(1e-12));
    }
  }
}

TEST_CASE("normalize centers the last observed frame and inverts exactly") {
  RngStream rng(33);
  Scene s = test::random_scene(4, 8, 12, rng);
  auto [centered, record] = normalize_scene(s);

  double cx = 0, cy = 0;
  for (std::int64_t i = 0; i < 4; ++i) {
    cx += centered.observed.at({i, 7, 0});
    cy += centered.observed.at({i, 7, 1});
  }
  CHECK(std::abs(cx / 4.0) < 1e-12);
  CHECK(std::abs(cy / 4.0) < 1e-12);

  Scene back = apply_transform(centered, record);
  for (std::int64_t i = 0; i < s.observed.numel(); ++i)
    CHECK(std::abs(back.observed.data()[static_cast<std::size_t>(i)] -
                   s.observed.data()[static_cast<std::size_t>(i)]) < 1e-12);
  for (std::int64_t i = 0; i < s.future.numel(); ++i)
    CHECK(std::abs(back.future.data()[static_cast<std::size_t>(i)] -
                   s.future.data()[static_cast<std::size_t>(i)]) < 1e-12);

  // Single constant agent at (5,5) shifts by (-5,-5).
  SyntheticSpec spec;
  spec.n_agents = 1;
  spec.t_obs = 8;
  spec.t_pred = 2;
  RngStream r2(2);
  Scene c = generate_synthetic(spec, r2).front();
  for (std::int64_t f = 0; f < 8; ++f) {
    c.observed.at({0, f, 0}) = 5.0;
    c.observed.at({0, f, 1}) = 5.0;
  }
  auto [cc, rec] = normalize_scene(c);
  CHECK(cc.observed.at({0, 0, 0}) == 0.0);
  CHECK(rec.dx == 5.0);
}

TEST_CASE("synthetic generators") {
  SyntheticSpec spec;
  spec.scenario = Scenario::ConstantVelocity;
  spec.n_agents = 3;
  spec.noise_std = 0.0;
  spec.seed = 9;
  spec.count = 2;

  RngStream rng(spec.seed);
  auto scenes = generate_synthetic(spec, rng);
  REQUIRE(scenes.size() == 2);
  for (const auto& s : scenes) {
    // future = last observed + t * velocity, exactly
    for (std::int64_t i = 0; i < s.num_agents(); ++i) {
      const double vx = s.observed.at({i, 7, 0}) - s.observed.at({i, 6, 0});
      const double vy = s.observed.at({i, 7, 1}) - s.observed.at({i, 6, 1});
      for (std::int64_t t = 0; t < s.t_pred(); ++t) {
        CHECK(s.future.at({i, t, 0}) ==
              doctest::Approx(s.observed.at({i, 7, 0}) + static_cast<double>(t + 1) * vx)
                  .epsilon(1e-12));
        CHECK(s.future.at({i, t, 1}) ==
              doctest::Approx(s.observed.at({i, 7, 1}) + static_cast<double>(t + 1) * vy)
                  .epsilon(1e-12));
      }
    }
  }

  // Same seed twice -> identical scenes.
  RngStream rng2(spec.seed);
  auto again = generate_synthetic(spec, rng2);
  for (std::size_t s = 0; s < scenes.size(); ++s)
    for (std::int64_t i = 0; i < scenes[s].observed.numel(); ++i)
      CHECK(scenes[s].observed.data()[static_cast<std::size_t>(i)] ==
            again[s].observed.data()[static_cast<std::size_t>(i)]);

  // Follower displacement at t equals leader displacement at t-1.
  spec.scenario = Scenario::GroupFollow;
  spec.n_agents = 4;
  spec.noise_std = 0.1;
  RngStream rng3(11);
  Scene gf = generate_synthetic(spec, rng3).front();
  auto pos = [&](std::int64_t a, std::int64_t f, int c) {
    return f < gf.t_obs() ? gf.observed.at({a, f, c}) : gf.future.at({a, f - gf.t_obs(), c});
  };
  for (std::int64_t a = 1; a < 4; ++a) {
    for (std::int64_t f = 2; f < gf.t_obs() + gf.t_pred(); ++f) {
      const double fdx = pos(a, f, 0) - pos(a, f - 1, 0);
      const double ldx = pos(0, f - 1, 0) - pos(0, f - 2, 0);
      CHECK(fdx == doctest::Approx(ldx).epsilon(1e-12));
    }
  }
}

TEST_CASE("trajectory file round trip through the writer") {
  SyntheticSpec spec;
  spec.scenario = Scenario::Crossing;
  spec.n_agents = 4;
  spec.noise_std = 0.02;
  spec.count = 3;
  RngStream rng(13);
  auto scenes = generate_synthetic(spec, rng);

  auto path = std::filesystem::temp_directory_path() / "vge_roundtrip.txt";
  write_trajectory_file(path, scenes);
  auto loaded = load_trajectory_file(path, spec.t_obs, spec.t_pred, 1);
  std::filesystem::remove(path);

  REQUIRE(loaded.size() == scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    REQUIRE(loaded[s].num_agents() == scenes[s].num_agents());
    for (std::int64_t i = 0; i < scenes[s].observed.numel(); ++i)
      CHECK(loaded[s].observed.data()[static_cast<std::size_t>(i)] ==
            scenes[s].observed.data()[static_cast<std::size_t>(i)]);
    for (std::int64_t i = 0; i < scenes[s].future.numel(); ++i)
      CHECK(loaded[s].future.data()[static_cast<std::size_t>(i)] ==
            scenes[s].future.data()[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("scene json export shape") {
  RngStream rng(3);
  Scene s = test::random_scene(2, 3, 2, rng);
  s.agent_ids = {10, 11};
  const std::string j = scene_to_json(s);
  CHECK(j.find("\"agents\":[") != std::string::npos);
  CHECK(j.find("\"id\":10") != std::string::npos);
  CHECK(j.find("\"observed\":[[") != std::string::npos);
  CHECK(j.find("\"future\":[[") != std::string::npos);
}
