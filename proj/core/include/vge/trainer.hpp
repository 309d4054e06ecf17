// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vge/checkpoint.hpp"
#include "vge/config.hpp"
#include "vge/model.hpp"
#include "vge/router.hpp"
#include "vge/scene.hpp"

namespace vge {

struct EpochStats {
  std::int64_t epoch = 0;
  double pred_loss = 0;
  double imp_loss = 0;
  double total_loss = 0;
  double val_min_ade = 0;
  double val_min_fde = 0;
};

/// One row of the evaluation CSV (`dataset,scene_count,min_ade_k,min_fde_k,k`).
struct DatasetMetrics {
  std::string dataset;
  std::int64_t scene_count = 0;
  double min_ade = 0;
  double min_fde = 0;
  std::int64_t k = 0;
};

std::string metrics_csv(std::span<const DatasetMetrics> rows);
std::string epoch_log_csv(std::span<const EpochStats> rows);

/// Resolves the config's data source: loads train_data files or generates
/// synthetic scenes, and splits off a validation set.
struct DataSplit {
  std::vector<Scene> train;
  std::vector<Scene> val;
};
DataSplit resolve_data(const RunConfig& config);

/// Minibatch Adam on total = pred + lambda * imp with deterministic
/// shuffling and gradient accumulation. Writes metrics.csv and
/// checkpoint.json under out_dir after every epoch. A non-finite loss
/// aborts with NumericalError carrying a JSON dump of the offending batch.
class Trainer {
 public:
  Trainer(RunConfig config, std::filesystem::path out_dir);

  /// Continue from a checkpoint instead of a fresh model; the checkpoint
  /// config must match the run config.
  void resume_from(const std::filesystem::path& checkpoint_path);

  std::vector<EpochStats> run();

  TrajectoryModel& model() { return *model_; }
  const std::vector<EpochStats>& history() const { return history_; }

 private:
  RunConfig config_;
  std::filesystem::path out_dir_;
  std::unique_ptr<TrajectoryModel> model_;
  std::unique_ptr<AdamOptimizer> optimizer_;
  std::vector<EpochStats> history_;
  std::int64_t start_epoch_ = 0;
  std::uint64_t noise_draws_ = 0;

  EpochStats run_epoch(std::int64_t epoch, std::span<Scene> train,
                       std::span<Scene> val);
};

/// Noise-free forward passes over `scenes`, aggregated min ADE/FDE over
/// the best of k heads.
DatasetMetrics evaluate_model(const TrajectoryModel& model, std::span<const Scene> scenes,
                              std::int64_t k, const std::string& dataset_name);

/// Constant-velocity extrapolation of the last observed displacement;
/// parameter-free, k = 1.
PredictionSet baseline_predict(const Scene& scene);
DatasetMetrics evaluate_baseline(std::span<const Scene> scenes,
                                 const std::string& dataset_name);

/// Gate rows for every agent of every scene, evaluation mode.
std::vector<GateRow> export_gates(const TrajectoryModel& model,
                                  std::span<const Scene> scenes);

/// Train on all files but one, evaluate on the held-out file, once per
/// file. Returns one metrics row per held-out subset plus an AVG row.
std::vector<DatasetMetrics> leave_one_out(const std::vector<std::string>& files,
                                          const RunConfig& base_config,
                                          const std::filesystem::path& out_dir);

}  // namespace vge
