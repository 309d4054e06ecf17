// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "vge/config.hpp"
#include "vge/model.hpp"
#include "vge/params.hpp"

namespace vge {

inline constexpr int kCheckpointFormatVersion = 1;

/// Versioned JSON checkpoint: config snapshot, every parameter with shape,
/// values and Adam moments, optimizer step count, epoch, and the noise
/// rng counter. Doubles round-trip exactly, so save/load/resume training
/// matches uninterrupted training bit for bit.
void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     const TrajectoryModel& model, const AdamOptimizer& optimizer,
                     std::int64_t epoch, std::uint64_t rng_counter);

struct LoadedCheckpoint {
  RunConfig config;
  std::unique_ptr<TrajectoryModel> model;
  std::int64_t adam_step = 0;
  std::int64_t epoch = 0;
  std::uint64_t rng_counter = 0;
};

/// Throws ParseError on malformed files and ContractError when the stored
/// parameters do not match the config's architecture.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vge
