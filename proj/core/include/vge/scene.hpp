// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vge/rng.hpp"
#include "vge/tensor.hpp"

namespace vge {

/// One prediction instance: N agents with complete observed and future
/// tracks, positions in meters.
struct Scene {
  Tensor observed;                      // [N, t_obs, 2]
  Tensor future;                        // [N, t_pred, 2]
  std::vector<std::int64_t> agent_ids;  // size N
  double frame_origin = 0;              // frame id of the last observed frame

  std::int64_t num_agents() const { return observed.dim(0); }
  std::int64_t t_obs() const { return observed.dim(1); }
  std::int64_t t_pred() const { return future.dim(1); }

  /// [N, 2] positions at the last observed frame.
  Tensor last_observed() const;
};

/// Per-agent per-frame [x, y, r_x, r_y]; r is the first difference of the
/// positions with a zero vector at the first observed frame.
struct FeatureTensor {
  Tensor values;  // [N, t_obs, 4]
};

struct TransformRecord {
  double dx = 0;
  double dy = 0;
};

enum class Scenario {
  ConstantVelocity,
  Crossing,     // two groups on curved intersecting paths
  GroupFollow,  // followers repeat the leader's displacement with a lag
};

Scenario scenario_from_string(const std::string& name);
std::string scenario_to_string(Scenario s);

struct SyntheticSpec {
  Scenario scenario = Scenario::ConstantVelocity;
  std::int64_t n_agents = 4;
  double noise_std = 0.0;  // meters
  std::uint64_t seed = 0;
  std::int64_t t_obs = 8;
  std::int64_t t_pred = 12;
  std::int64_t count = 1;  // scenes to generate
};

/// Parse a whitespace-separated `frame_id agent_id x y` trajectory file
/// into sliding-window scenes. Windows cover t_obs + t_pred consecutive
/// frames of the file's frame sequence and advance by `stride`; an agent
/// enters a scene only when present at every frame of the window, and
/// windows with no qualifying agents are dropped. Throws ParseError on a
/// malformed line and EmptyDataset when nothing qualifies.
std::vector<Scene> load_trajectory_file(const std::filesystem::path& path,
                                        std::int64_t t_obs, std::int64_t t_pred,
                                        std::int64_t stride);

/// Inverse of load_trajectory_file for generated data: writes scenes as
/// consecutive frame blocks with per-scene-unique agent ids, so loading
/// the file back (same t_obs/t_pred, any stride) recovers the scenes.
void write_trajectory_file(const std::filesystem::path& path,
                           std::span<const Scene> scenes);

FeatureTensor build_input_features(const Scene& scene);

/// Translate so the mean of the last-observed-frame positions is the
/// origin. apply_transform with the returned record inverts exactly.
std::pair<Scene, TransformRecord> normalize_scene(const Scene& scene);
Scene apply_transform(const Scene& scene, const TransformRecord& t);

std::vector<Scene> generate_synthetic(const SyntheticSpec& spec, RngStream& rng);

/// {"agents":[{"id":..,"observed":[[x,y],..],"future":[[x,y],..]},..]}
std::string scene_to_json(const Scene& scene);

}  // namespace vge
