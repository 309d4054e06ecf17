// SPDX-License-Identifier: Apache-2.0
#include "vge/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "vge/errors.hpp"

namespace vge {

using nlohmann::ordered_json;

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.t_obs = t_obs;
  m.t_pred = t_pred;
  m.k_neighbors = k_neighbors;
  m.hidden_dim = hidden_dim;
  m.virtual_count = virtual_count;
  m.heads = heads;
  m.top_p = top_p;
  m.lambda = lambda;
  m.perturb_std = perturb_std;
  m.noise_enabled = noise_enabled;
  m.aggregator = aggregator_from_string(aggregator);
  return m;
}

void RunConfig::validate() const {
  model_config().validate();
  if (learning_rate <= 0) throw ContractError("learning_rate must be > 0");
  if (epochs < 0) throw ContractError("epochs must be >= 0");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (stride < 1) throw ContractError("stride must be >= 1");
  if (val_fraction < 0 || val_fraction >= 1)
    throw ContractError("val_fraction must be in [0,1)");
  if (train_data.empty()) {
    if (synthetic_scenario != "mixed") scenario_from_string(synthetic_scenario);
    if (synthetic_count < 1) throw ContractError("synthetic_count must be >= 1");
    if (synthetic_agents < 1) throw ContractError("synthetic_agents must be >= 1");
    if (val_count < 1) throw ContractError("val_count must be >= 1");
    if (noise_std < 0) throw ContractError("noise_std must be >= 0");
  }
}

RunConfig RunConfig::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config must be a JSON object");

  RunConfig c;
  std::set<std::string> known;
  auto read_i64 = [&](const char* key, std::int64_t& out) {
    known.insert(key);
    if (j.contains(key)) out = j.at(key).get<std::int64_t>();
  };
  auto read_u64 = [&](const char* key, std::uint64_t& out) {
    known.insert(key);
    if (j.contains(key)) out = j.at(key).get<std::uint64_t>();
  };
  auto read_f64 = [&](const char* key, double& out) {
    known.insert(key);
    if (j.contains(key)) out = j.at(key).get<double>();
  };
  auto read_bool = [&](const char* key, bool& out) {
    known.insert(key);
    if (j.contains(key)) out = j.at(key).get<bool>();
  };
  auto read_str = [&](const char* key, std::string& out) {
    known.insert(key);
    if (j.contains(key)) out = j.at(key).get<std::string>();
  };

  read_i64("t_obs", c.t_obs);
  read_i64("t_pred", c.t_pred);
  read_i64("k_neighbors", c.k_neighbors);
  read_i64("hidden_dim", c.hidden_dim);
  read_i64("virtual_count", c.virtual_count);
  read_i64("heads", c.heads);
  read_f64("top_p", c.top_p);
  read_f64("lambda", c.lambda);
  read_f64("learning_rate", c.learning_rate);
  read_i64("epochs", c.epochs);
  read_i64("batch_size", c.batch_size);
  read_u64("seed", c.seed);
  read_i64("stride", c.stride);
  read_f64("perturb_std", c.perturb_std);
  read_bool("noise_enabled", c.noise_enabled);
  read_str("aggregator", c.aggregator);
  read_str("val_data", c.val_data);
  read_f64("val_fraction", c.val_fraction);
  read_str("synthetic_scenario", c.synthetic_scenario);
  read_i64("synthetic_count", c.synthetic_count);
  read_i64("synthetic_agents", c.synthetic_agents);
  read_i64("val_count", c.val_count);
  read_f64("noise_std", c.noise_std);

  known.insert("train_data");
  if (j.contains("train_data")) {
    const auto& td = j.at("train_data");
    if (td.is_string()) {
      c.train_data = {td.get<std::string>()};
    } else if (td.is_array()) {
      for (const auto& item : td) c.train_data.push_back(item.get<std::string>());
    } else {
      throw ParseError("train_data must be a string or array of strings");
    }
  }

  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ContractError("unknown config key: " + key);
  }

  c.validate();
  return c;
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

std::string RunConfig::to_json() const {
  ordered_json j;
  j["t_obs"] = t_obs;
  j["t_pred"] = t_pred;
  j["k_neighbors"] = k_neighbors;
  j["hidden_dim"] = hidden_dim;
  j["virtual_count"] = virtual_count;
  j["heads"] = heads;
  j["top_p"] = top_p;
  j["lambda"] = lambda;
  j["learning_rate"] = learning_rate;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["stride"] = stride;
  j["perturb_std"] = perturb_std;
  j["noise_enabled"] = noise_enabled;
  j["aggregator"] = aggregator;
  j["train_data"] = train_data;
  j["val_data"] = val_data;
  j["val_fraction"] = val_fraction;
  j["synthetic_scenario"] = synthetic_scenario;
  j["synthetic_count"] = synthetic_count;
  j["synthetic_agents"] = synthetic_agents;
  j["val_count"] = val_count;
  j["noise_std"] = noise_std;
  return j.dump(2);
}

}  // namespace vge
