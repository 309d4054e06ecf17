// SPDX-License-Identifier: Apache-2.0
#include "vge/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vge/csv.hpp"
#include "vge/errors.hpp"

namespace vge {

Tensor Scene::last_observed() const {
  const std::int64_t n = num_agents(), t = t_obs();
  std::vector<double> out(static_cast<std::size_t>(n * 2));
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i * 2)] = observed.at({i, t - 1, 0});
    out[static_cast<std::size_t>(i * 2 + 1)] = observed.at({i, t - 1, 1});
  }
  return Tensor(Shape{n, 2}, std::move(out));
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "constant-velocity") return Scenario::ConstantVelocity;
  if (name == "crossing") return Scenario::Crossing;
  if (name == "group-follow") return Scenario::GroupFollow;
  throw ContractError("unknown scenario: " + name);
}

std::string scenario_to_string(Scenario s) {
  switch (s) {
    case Scenario::ConstantVelocity: return "constant-velocity";
    case Scenario::Crossing: return "crossing";
    case Scenario::GroupFollow: return "group-follow";
  }
  return "?";
}

namespace {

struct Observation {
  double frame;
  std::int64_t agent;
  double x;
  double y;
};

}  // namespace

std::vector<Scene> load_trajectory_file(const std::filesystem::path& path,
                                        std::int64_t t_obs, std::int64_t t_pred,
                                        std::int64_t stride) {
  if (t_obs < 2) throw ContractError("t_obs must be >= 2");
  if (t_pred < 1 || stride < 1) throw ContractError("t_pred and stride must be >= 1");

  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  std::vector<Observation> obs;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double frame, agent, x, y;
    if (!(ls >> frame >> agent >> x >> y))
      throw ParseError("expected `frame_id agent_id x y` in " + path.string(), line_no);
    std::string rest;
    if (ls >> rest) throw ParseError("trailing tokens in " + path.string(), line_no);
    obs.push_back({frame, static_cast<std::int64_t>(agent), x, y});
  }

  // Windows index into the file's sorted unique frame sequence; raw frame
  // ids may step by any fixed interval.
  std::vector<double> frames;
  frames.reserve(obs.size());
  for (const auto& o : obs) frames.push_back(o.frame);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

  std::map<double, std::int64_t> frame_index;
  for (std::size_t i = 0; i < frames.size(); ++i)
    frame_index[frames[i]] = static_cast<std::int64_t>(i);

  // (agent, frame index) -> position
  std::map<std::pair<std::int64_t, std::int64_t>, std::pair<double, double>> track;
  for (const auto& o : obs) {
    auto key = std::make_pair(o.agent, frame_index[o.frame]);
    if (!track.emplace(key, std::make_pair(o.x, o.y)).second)
      throw ParseError("duplicate observation for agent " + std::to_string(o.agent) +
                       " in " + path.string());
  }

  const std::int64_t window = t_obs + t_pred;
  const auto total_frames = static_cast<std::int64_t>(frames.size());
  std::vector<Scene> scenes;
  for (std::int64_t start = 0; start + window <= total_frames; start += stride) {
    std::set<std::int64_t> agents;
    for (const auto& [key, _] : track)
      if (key.second == start) agents.insert(key.first);

    std::vector<std::int64_t> complete;
    for (auto a : agents) {
      bool ok = true;
      for (std::int64_t f = start; f < start + window && ok; ++f)
        ok = track.count({a, f}) != 0;
      if (ok) complete.push_back(a);
    }
    if (complete.empty()) continue;

    const auto n = static_cast<std::int64_t>(complete.size());
    Tensor observed = Tensor::zeros(Shape{n, t_obs, 2});
    Tensor future = Tensor::zeros(Shape{n, t_pred, 2});
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t f = 0; f < window; ++f) {
        const auto& pos = track.at({complete[static_cast<std::size_t>(i)], start + f});
        if (f < t_obs) {
          observed.at({i, f, 0}) = pos.first;
          observed.at({i, f, 1}) = pos.second;
        } else {
          future.at({i, f - t_obs, 0}) = pos.first;
          future.at({i, f - t_obs, 1}) = pos.second;
        }
      }
    }
    Scene s;
    s.observed = std::move(observed);
    s.future = std::move(future);
    s.agent_ids = std::move(complete);
    s.frame_origin = frames[static_cast<std::size_t>(start + t_obs - 1)];
    scenes.push_back(std::move(s));
  }

  if (scenes.empty()) throw EmptyDataset("no complete windows in " + path.string());
  return scenes;
}

void write_trajectory_file(const std::filesystem::path& path,
                           std::span<const Scene> scenes) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  std::int64_t frame_base = 0;
  std::int64_t agent_base = 0;
  for (const auto& s : scenes) {
    const std::int64_t window = s.t_obs() + s.t_pred();
    for (std::int64_t f = 0; f < window; ++f) {
      for (std::int64_t i = 0; i < s.num_agents(); ++i) {
        const bool in_obs = f < s.t_obs();
        const double x = in_obs ? s.observed.at({i, f, 0}) : s.future.at({i, f - s.t_obs(), 0});
        const double y = in_obs ? s.observed.at({i, f, 1}) : s.future.at({i, f - s.t_obs(), 1});
        out << (frame_base + f) << ' ' << (agent_base + i) << ' ' << fmt_double(x) << ' '
            << fmt_double(y) << '\n';
      }
    }
    frame_base += window;
    agent_base += s.num_agents();
  }
}

FeatureTensor build_input_features(const Scene& scene) {
  const std::int64_t n = scene.num_agents(), t = scene.t_obs();
  Tensor values = Tensor::zeros(Shape{n, t, 4});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t f = 0; f < t; ++f) {
      const double x = scene.observed.at({i, f, 0});
      const double y = scene.observed.at({i, f, 1});
      values.at({i, f, 0}) = x;
      values.at({i, f, 1}) = y;
      if (f > 0) {
        values.at({i, f, 2}) = x - scene.observed.at({i, f - 1, 0});
        values.at({i, f, 3}) = y - scene.observed.at({i, f - 1, 1});
      }
    }
  }
  return FeatureTensor{std::move(values)};
}

std::pair<Scene, TransformRecord> normalize_scene(const Scene& scene) {
  const std::int64_t n = scene.num_agents(), t = scene.t_obs();
  double cx = 0, cy = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    cx += scene.observed.at({i, t - 1, 0});
    cy += scene.observed.at({i, t - 1, 1});
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);
  TransformRecord rec{-cx, -cy};
  return {apply_transform(scene, rec), TransformRecord{cx, cy}};
}

Scene apply_transform(const Scene& scene, const TransformRecord& t) {
  Scene out = scene;
  out.observed = scene.observed.detached();
  out.future = scene.future.detached();
  auto shift = [&](Tensor& tensor) {
    auto d = tensor.data();
    for (std::size_t i = 0; i < d.size(); i += 2) {
      d[i] += t.dx;
      d[i + 1] += t.dy;
    }
  };
  shift(out.observed);
  shift(out.future);
  return out;
}

namespace {

Scene trajectory_to_scene(const std::vector<std::vector<std::pair<double, double>>>& paths,
                          std::int64_t t_obs, std::int64_t t_pred) {
  const auto n = static_cast<std::int64_t>(paths.size());
  Scene s;
  s.observed = Tensor::zeros(Shape{n, t_obs, 2});
  s.future = Tensor::zeros(Shape{n, t_pred, 2});
  for (std::int64_t i = 0; i < n; ++i) {
    s.agent_ids.push_back(i);
    for (std::int64_t f = 0; f < t_obs + t_pred; ++f) {
      const auto& p = paths[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
      if (f < t_obs) {
        s.observed.at({i, f, 0}) = p.first;
        s.observed.at({i, f, 1}) = p.second;
      } else {
        s.future.at({i, f - t_obs, 0}) = p.first;
        s.future.at({i, f - t_obs, 1}) = p.second;
      }
    }
  }
  s.frame_origin = static_cast<double>(t_obs - 1);
  return s;
}

Scene make_constant_velocity(const SyntheticSpec& spec, RngStream& rng) {
  const std::int64_t total = spec.t_obs + spec.t_pred;
  std::vector<std::vector<std::pair<double, double>>> paths(
      static_cast<std::size_t>(spec.n_agents));
  for (auto& path : paths) {
    const double sx = rng.uniform() * 10.0 - 5.0;
    const double sy = rng.uniform() * 10.0 - 5.0;
    const double speed = 0.3 + 0.2 * rng.uniform();
    const double heading = rng.uniform() * 2.0 * 3.14159265358979323846;
    const double vx = speed * std::cos(heading);
    const double vy = speed * std::sin(heading);
    path.reserve(static_cast<std::size_t>(total));
    for (std::int64_t f = 0; f < total; ++f) {
      double x = sx + static_cast<double>(f) * vx;
      double y = sy + static_cast<double>(f) * vy;
      if (spec.noise_std > 0) {
        x += spec.noise_std * rng.normal();
        y += spec.noise_std * rng.normal();
      }
      path.emplace_back(x, y);
    }
  }
  return trajectory_to_scene(paths, spec.t_obs, spec.t_pred);
}

// Two groups on intersecting curved paths: the heading rotates by a fixed
// per-agent rate every frame, so the observed window already shows the
// turn the future continues.
Scene make_crossing(const SyntheticSpec& spec, RngStream& rng) {
  const std::int64_t total = spec.t_obs + spec.t_pred;
  std::vector<std::vector<std::pair<double, double>>> paths(
      static_cast<std::size_t>(spec.n_agents));
  for (std::int64_t i = 0; i < spec.n_agents; ++i) {
    const bool group_a = (i % 2) == 0;
    const double lane = 0.6 * static_cast<double>(i / 2) - 0.3;
    const double speed = 0.3 + 0.15 * rng.uniform();
    const double turn_deg = (2.0 + 3.0 * rng.uniform()) * (group_a ? 1.0 : -1.0);
    const double turn = turn_deg * 3.14159265358979323846 / 180.0;
    double heading = group_a ? 0.0 : 3.14159265358979323846 / 2.0;
    double x = group_a ? -0.5 * speed * static_cast<double>(total) : lane;
    double y = group_a ? lane : -0.5 * speed * static_cast<double>(total);
    auto& path = paths[static_cast<std::size_t>(i)];
    path.reserve(static_cast<std::size_t>(total));
    for (std::int64_t f = 0; f < total; ++f) {
      double px = x, py = y;
      if (spec.noise_std > 0) {
        px += spec.noise_std * rng.normal();
        py += spec.noise_std * rng.normal();
      }
      path.emplace_back(px, py);
      x += speed * std::cos(heading);
      y += speed * std::sin(heading);
      heading += turn;
    }
  }
  return trajectory_to_scene(paths, spec.t_obs, spec.t_pred);
}

// Agent 0 leads with constant velocity; every follower repeats the
// leader's displacement one lag behind, so follower displacement at frame
// f equals the leader's at f-1. Noise perturbs only the leader's start so
// the copy recurrence stays exact.
Scene make_group_follow(const SyntheticSpec& spec, RngStream& rng) {
  const std::int64_t total = spec.t_obs + spec.t_pred;
  const std::int64_t lag = 1;
  const double speed = 0.3 + 0.2 * rng.uniform();
  const double heading = rng.uniform() * 2.0 * 3.14159265358979323846;
  const double vx = speed * std::cos(heading);
  const double vy = speed * std::sin(heading);
  double lx = rng.uniform() * 4.0 - 2.0 + spec.noise_std * rng.normal();
  double ly = rng.uniform() * 4.0 - 2.0 + spec.noise_std * rng.normal();

  std::vector<std::vector<std::pair<double, double>>> paths(
      static_cast<std::size_t>(spec.n_agents));
  auto& leader = paths[0];
  for (std::int64_t f = 0; f < total; ++f)
    leader.emplace_back(lx + static_cast<double>(f) * vx, ly + static_cast<double>(f) * vy);

  for (std::int64_t i = 1; i < spec.n_agents; ++i) {
    auto& path = paths[static_cast<std::size_t>(i)];
    double x = lx - 0.8 * static_cast<double>(i) * std::cos(heading) +
               0.4 * static_cast<double>(i % 2 ? 1 : -1);
    double y = ly - 0.8 * static_cast<double>(i) * std::sin(heading);
    path.emplace_back(x, y);
    for (std::int64_t f = 1; f < total; ++f) {
      const std::int64_t src = f - lag;
      double dx2 = 0, dy2 = 0;
      if (src >= 1) {
        dx2 = leader[static_cast<std::size_t>(src)].first - leader[static_cast<std::size_t>(src - 1)].first;
        dy2 = leader[static_cast<std::size_t>(src)].second - leader[static_cast<std::size_t>(src - 1)].second;
      }
      x += dx2;
      y += dy2;
      path.emplace_back(x, y);
    }
  }
  return trajectory_to_scene(paths, spec.t_obs, spec.t_pred);
}

}  // namespace

std::vector<Scene> generate_synthetic(const SyntheticSpec& spec, RngStream& rng) {
  if (spec.n_agents < 1) throw ContractError("n_agents must be >= 1");
  if (spec.t_obs < 2) throw ContractError("t_obs must be >= 2");
  if (spec.count < 0) throw ContractError("count must be >= 0");
  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(spec.count));
  for (std::int64_t c = 0; c < spec.count; ++c) {
    switch (spec.scenario) {
      case Scenario::ConstantVelocity:
        scenes.push_back(make_constant_velocity(spec, rng));
        break;
      case Scenario::Crossing:
        scenes.push_back(make_crossing(spec, rng));
        break;
      case Scenario::GroupFollow:
        scenes.push_back(make_group_follow(spec, rng));
        break;
    }
  }
  return scenes;
}

std::string scene_to_json(const Scene& scene) {
  std::ostringstream out;
  out << "{\"agents\":[";
  for (std::int64_t i = 0; i < scene.num_agents(); ++i) {
    if (i) out << ',';
    out << "{\"id\":" << scene.agent_ids[static_cast<std::size_t>(i)] << ",\"observed\":[";
    for (std::int64_t f = 0; f < scene.t_obs(); ++f) {
      if (f) out << ',';
      out << '[' << fmt_double(scene.observed.at({i, f, 0})) << ','
          << fmt_double(scene.observed.at({i, f, 1})) << ']';
    }
    out << "],\"future\":[";
    for (std::int64_t f = 0; f < scene.t_pred(); ++f) {
      if (f) out << ',';
      out << '[' << fmt_double(scene.future.at({i, f, 0})) << ','
          << fmt_double(scene.future.at({i, f, 1})) << ']';
    }
    out << "]}";
  }
  out << "]}";
  return out.str();
}

}  // namespace vge
