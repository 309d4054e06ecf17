// SPDX-License-Identifier: Apache-2.0
#include "vge/checkpoint.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "vge/errors.hpp"

namespace vge {

using nlohmann::ordered_json;

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     const TrajectoryModel& model, const AdamOptimizer& optimizer,
                     std::int64_t epoch, std::uint64_t rng_counter) {
  ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["config"] = ordered_json::parse(config.to_json());
  j["epoch"] = epoch;
  j["adam_step"] = optimizer.step_count();
  j["rng_counter"] = rng_counter;

  ordered_json params = ordered_json::array();
  for (const auto& p : model.params().all()) {
    ordered_json entry;
    entry["name"] = p.name;
    entry["shape"] = p.value.shape();
    entry["data"] = std::vector<double>(p.value.data().begin(), p.value.data().end());
    entry["m"] = std::vector<double>(p.m.data().begin(), p.m.data().end());
    entry["v"] = std::vector<double>(p.v.data().begin(), p.v.data().end());
    params.push_back(std::move(entry));
  }
  j["params"] = std::move(params);

  std::ofstream out(path);
  if (!out) throw ParseError("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError("checkpoint is not valid JSON: " + std::string(e.what()));
  }

  if (!j.contains("format_version") || j.at("format_version").get<int>() != kCheckpointFormatVersion)
    throw ContractError("unsupported checkpoint format version");

  LoadedCheckpoint loaded;
  loaded.config = RunConfig::from_json(j.at("config").dump());
  loaded.epoch = j.at("epoch").get<std::int64_t>();
  loaded.adam_step = j.at("adam_step").get<std::int64_t>();
  loaded.rng_counter = j.at("rng_counter").get<std::uint64_t>();
  loaded.model = std::make_unique<TrajectoryModel>(loaded.config.model_config(),
                                                   loaded.config.seed);

  std::set<std::string> restored;
  for (const auto& entry : j.at("params")) {
    const auto name = entry.at("name").get<std::string>();
    if (!loaded.model->params().contains(name))
      throw ContractError("checkpoint parameter not in architecture: " + name);
    Parameter& p = loaded.model->params().at(name);
    const auto shape = entry.at("shape").get<Shape>();
    if (shape != p.value.shape())
      throw ContractError("checkpoint shape mismatch for " + name);
    p.value = Tensor(shape, entry.at("data").get<std::vector<double>>());
    p.m = Tensor(shape, entry.at("m").get<std::vector<double>>());
    p.v = Tensor(shape, entry.at("v").get<std::vector<double>>());
    restored.insert(name);
  }
  if (restored.size() != loaded.model->params().size())
    throw ContractError("checkpoint is missing parameters: expected " +
                        std::to_string(loaded.model->params().size()) + ", got " +
                        std::to_string(restored.size()));
  return loaded;
}

}  // namespace vge
