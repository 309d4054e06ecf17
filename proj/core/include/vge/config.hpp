// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vge/model.hpp"

namespace vge {

/// Flat run configuration, mirrored 1:1 by the JSON config file. Unknown
/// keys in the file are rejected. Data source is either one or more
/// trajectory files (train_data) or a synthetic generator spec.
struct RunConfig {
  std::int64_t t_obs = 8;
  std::int64_t t_pred = 12;
  std::int64_t k_neighbors = 4;
  std::int64_t hidden_dim = 64;
  std::int64_t virtual_count = 4;
  std::int64_t heads = 20;
  double top_p = 0.7;
  double lambda = 0.01;
  double learning_rate = 3e-3;
  std::int64_t epochs = 30;
  std::int64_t batch_size = 8;
  std::uint64_t seed = 1;
  std::int64_t stride = 1;
  double perturb_std = 0.1;
  bool noise_enabled = true;
  std::string aggregator = "attention";

  // file data source
  std::vector<std::string> train_data;
  std::string val_data;
  double val_fraction = 0.2;  // split of train_data when val_data is empty

  // synthetic data source (used when train_data is empty)
  std::string synthetic_scenario = "mixed";  // or a single scenario name
  std::int64_t synthetic_count = 200;
  std::int64_t synthetic_agents = 6;
  std::int64_t val_count = 50;
  double noise_std = 0.05;

  ModelConfig model_config() const;
  void validate() const;  // ContractError on invalid values

  static RunConfig from_json(const std::string& text);
  static RunConfig from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
};

}  // namespace vge
