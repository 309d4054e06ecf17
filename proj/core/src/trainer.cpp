// SPDX-License-Identifier: Apache-2.0
#include "vge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vge/csv.hpp"
#include "vge/errors.hpp"
#include "vge/tape.hpp"

namespace vge {

std::string metrics_csv(std::span<const DatasetMetrics> rows) {
  std::ostringstream out;
  out << "dataset,scene_count,min_ade_k,min_fde_k,k\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.scene_count << ',' << fmt_double(r.min_ade) << ','
        << fmt_double(r.min_fde) << ',' << r.k << '\n';
  }
  return out.str();
}

std::string epoch_log_csv(std::span<const EpochStats> rows) {
  std::ostringstream out;
  out << "epoch,pred_loss,imp_loss,total_loss,val_min_ade,val_min_fde\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << fmt_double(r.pred_loss) << ',' << fmt_double(r.imp_loss) << ','
        << fmt_double(r.total_loss) << ',' << fmt_double(r.val_min_ade) << ','
        << fmt_double(r.val_min_fde) << '\n';
  }
  return out.str();
}

namespace {

std::vector<Scene> generate_mix(const RunConfig& config, std::int64_t count,
                                const char* tag) {
  std::vector<Scenario> scenarios;
  if (config.synthetic_scenario == "mixed") {
    scenarios = {Scenario::ConstantVelocity, Scenario::Crossing, Scenario::GroupFollow};
  } else {
    scenarios = {scenario_from_string(config.synthetic_scenario)};
  }

  // Per-scenario batches, interleaved round-robin so minibatches mix.
  std::vector<std::vector<Scene>> buckets;
  const auto s_count = static_cast<std::int64_t>(scenarios.size());
  for (std::int64_t s = 0; s < s_count; ++s) {
    SyntheticSpec spec;
    spec.scenario = scenarios[static_cast<std::size_t>(s)];
    spec.n_agents = config.synthetic_agents;
    spec.noise_std = config.noise_std;
    spec.seed = RngStream::derive(config.seed, tag, static_cast<std::uint64_t>(s)).seed();
    spec.t_obs = config.t_obs;
    spec.t_pred = config.t_pred;
    spec.count = count / s_count + (s < count % s_count ? 1 : 0);
    RngStream rng(spec.seed);
    buckets.push_back(generate_synthetic(spec, rng));
  }

  std::vector<Scene> mixed;
  mixed.reserve(static_cast<std::size_t>(count));
  for (std::size_t round = 0; mixed.size() < static_cast<std::size_t>(count); ++round) {
    for (auto& bucket : buckets) {
      if (round < bucket.size()) mixed.push_back(std::move(bucket[round]));
    }
  }
  return mixed;
}

void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
}

void accumulate(GradientMap& acc, const GradientMap& grads) {
  for (const auto& [name, g] : grads) {
    auto it = acc.find(name);
    if (it == acc.end()) {
      acc.emplace(name, g.detached());
    } else {
      auto dst = it->second.data();
      auto src = g.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

std::string dataset_label(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

}  // namespace

DataSplit resolve_data(const RunConfig& config) {
  DataSplit split;
  if (!config.train_data.empty()) {
    for (const auto& file : config.train_data) {
      auto scenes = load_trajectory_file(file, config.t_obs, config.t_pred, config.stride);
      split.train.insert(split.train.end(), std::make_move_iterator(scenes.begin()),
                         std::make_move_iterator(scenes.end()));
    }
    if (!config.val_data.empty()) {
      split.val = load_trajectory_file(config.val_data, config.t_obs, config.t_pred,
                                       config.stride);
    } else if (config.val_fraction > 0 && split.train.size() > 1) {
      const auto n = split.train.size();
      auto val_count = static_cast<std::size_t>(static_cast<double>(n) * config.val_fraction);
      val_count = std::min(val_count, n - 1);
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      RngStream rng = RngStream::derive(config.seed, "split");
      shuffle_indices(idx, rng);
      std::vector<bool> is_val(n, false);
      for (std::size_t i = 0; i < val_count; ++i) is_val[idx[i]] = true;
      DataSplit out;
      for (std::size_t i = 0; i < n; ++i)
        (is_val[i] ? out.val : out.train).push_back(std::move(split.train[i]));
      split = std::move(out);
    }
  } else {
    split.train = generate_mix(config, config.synthetic_count, "syn-train");
    split.val = generate_mix(config, config.val_count, "syn-val");
  }
  if (split.train.empty()) throw EmptyDataset("no training scenes");
  return split;
}

Trainer::Trainer(RunConfig config, std::filesystem::path out_dir)
    : config_(std::move(config)), out_dir_(std::move(out_dir)) {
  config_.validate();
  std::filesystem::create_directories(out_dir_);
}

void Trainer::resume_from(const std::filesystem::path& checkpoint_path) {
  LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
  config_ = loaded.config;
  model_ = std::move(loaded.model);
  optimizer_ = std::make_unique<AdamOptimizer>(AdamConfig{.lr = config_.learning_rate});
  optimizer_->set_step_count(loaded.adam_step);
  start_epoch_ = loaded.epoch;
  noise_draws_ = loaded.rng_counter;
}

std::vector<EpochStats> Trainer::run() {
  DataSplit data = resolve_data(config_);
  if (!model_) {
    model_ = std::make_unique<TrajectoryModel>(config_.model_config(), config_.seed);
    optimizer_ = std::make_unique<AdamOptimizer>(AdamConfig{.lr = config_.learning_rate});
  }

  auto flush = [&](std::int64_t epoch) {
    std::ofstream log(out_dir_ / "metrics.csv");
    log << epoch_log_csv(history_);
    save_checkpoint(out_dir_ / "checkpoint.json", config_, *model_, *optimizer_, epoch,
                    noise_draws_);
  };

  if (start_epoch_ >= config_.epochs) {
    flush(start_epoch_);  // 0-epoch runs still leave an initialized checkpoint
    return history_;
  }

  for (std::int64_t epoch = start_epoch_; epoch < config_.epochs; ++epoch) {
    history_.push_back(run_epoch(epoch, data.train, data.val));
    flush(epoch + 1);
  }
  return history_;
}

EpochStats Trainer::run_epoch(std::int64_t epoch, std::span<Scene> train,
                              std::span<Scene> val) {
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RngStream shuffle_rng =
      RngStream::derive(config_.seed, "shuffle", static_cast<std::uint64_t>(epoch));
  shuffle_indices(order, shuffle_rng);

  double pred_sum = 0, imp_sum = 0, total_sum = 0;
  std::size_t cursor = 0;
  while (cursor < order.size()) {
    const std::size_t batch_end =
        std::min(cursor + static_cast<std::size_t>(config_.batch_size), order.size());
    GradientMap acc;
    const auto in_batch = static_cast<double>(batch_end - cursor);
    for (; cursor < batch_end; ++cursor) {
      const Scene& scene = train[order[cursor]];
      RngStream noise = RngStream::derive(config_.seed, "noise",
                                          static_cast<std::uint64_t>(epoch), cursor);
      Tape tape;
      auto fwd = model_->forward(scene, /*train_mode=*/true, &noise);
      if (!std::isfinite(fwd.loss.total)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch + 1),
                             scene_to_json(scene));
      }
      accumulate(acc, tape.backward(fwd.loss.total_tape));
      noise_draws_ += noise.counter();
      pred_sum += fwd.loss.pred_loss;
      imp_sum += fwd.loss.imp_loss;
      total_sum += fwd.loss.total;
    }
    for (auto& [_, g] : acc) {
      for (auto& v : g.data()) v /= in_batch;
    }
    optimizer_->step(model_->params(), acc);
  }

  EpochStats stats;
  stats.epoch = epoch + 1;
  const auto n = static_cast<double>(train.size());
  stats.pred_loss = pred_sum / n;
  stats.imp_loss = imp_sum / n;
  stats.total_loss = total_sum / n;
  if (!val.empty()) {
    auto m = evaluate_model(*model_, val, config_.heads, "val");
    stats.val_min_ade = m.min_ade;
    stats.val_min_fde = m.min_fde;
  }
  return stats;
}

DatasetMetrics evaluate_model(const TrajectoryModel& model, std::span<const Scene> scenes,
                              std::int64_t k, const std::string& dataset_name) {
  if (scenes.empty()) throw EmptyDataset("no scenes to evaluate");
  double ade_sum = 0, fde_sum = 0;
  std::int64_t agents = 0;
  for (const auto& scene : scenes) {
    auto fwd = model.forward(scene, /*train_mode=*/false, nullptr);
    Metrics m = min_ade_fde(fwd.predictions, scene.future, k);
    ade_sum += m.min_ade * static_cast<double>(scene.num_agents());
    fde_sum += m.min_fde * static_cast<double>(scene.num_agents());
    agents += scene.num_agents();
  }
  return DatasetMetrics{dataset_name, static_cast<std::int64_t>(scenes.size()),
                        ade_sum / static_cast<double>(agents),
                        fde_sum / static_cast<double>(agents), k};
}

PredictionSet baseline_predict(const Scene& scene) {
  const std::int64_t n = scene.num_agents();
  const std::int64_t t_obs = scene.t_obs();
  const std::int64_t t_pred = scene.t_pred();
  PredictionSet preds;
  preds.k_heads = 1;
  preds.n_agents = n;
  preds.t_pred = t_pred;
  preds.trajectories = Tensor::zeros(Shape{1, n, t_pred, 2});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t c = 0; c < 2; ++c) {
      const double last = scene.observed.at({i, t_obs - 1, c});
      const double disp = last - scene.observed.at({i, t_obs - 2, c});
      for (std::int64_t t = 0; t < t_pred; ++t)
        preds.trajectories.at({0, i, t, c}) = last + static_cast<double>(t + 1) * disp;
    }
  }
  return preds;
}

DatasetMetrics evaluate_baseline(std::span<const Scene> scenes,
                                 const std::string& dataset_name) {
  if (scenes.empty()) throw EmptyDataset("no scenes to evaluate");
  double ade_sum = 0, fde_sum = 0;
  std::int64_t agents = 0;
  for (const auto& scene : scenes) {
    PredictionSet preds = baseline_predict(scene);
    Metrics m = min_ade_fde(preds, scene.future, 1);
    ade_sum += m.min_ade * static_cast<double>(scene.num_agents());
    fde_sum += m.min_fde * static_cast<double>(scene.num_agents());
    agents += scene.num_agents();
  }
  return DatasetMetrics{dataset_name, static_cast<std::int64_t>(scenes.size()),
                        ade_sum / static_cast<double>(agents),
                        fde_sum / static_cast<double>(agents), 1};
}

std::vector<GateRow> export_gates(const TrajectoryModel& model,
                                  std::span<const Scene> scenes) {
  std::vector<GateRow> rows;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    auto fwd = model.forward(scenes[s], /*train_mode=*/false, nullptr);
    for (std::int64_t i = 0; i < scenes[s].num_agents(); ++i) {
      GateRow row;
      row.scene_id = static_cast<std::int64_t>(s);
      row.agent_id = scenes[s].agent_ids[static_cast<std::size_t>(i)];
      row.gate = fwd.gates[static_cast<std::size_t>(i)];
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<DatasetMetrics> leave_one_out(const std::vector<std::string>& files,
                                          const RunConfig& base_config,
                                          const std::filesystem::path& out_dir) {
  if (files.size() < 2)
    throw ContractError("leave-one-out needs at least two subset files");

  std::vector<DatasetMetrics> rows;
  for (std::size_t held = 0; held < files.size(); ++held) {
    RunConfig cfg = base_config;
    cfg.train_data.clear();
    for (std::size_t i = 0; i < files.size(); ++i)
      if (i != held) cfg.train_data.push_back(files[i]);
    cfg.val_data = files[held];

    Trainer trainer(cfg, out_dir / ("fold_" + dataset_label(files[held])));
    trainer.run();

    auto held_scenes = load_trajectory_file(files[held], cfg.t_obs, cfg.t_pred, cfg.stride);
    rows.push_back(evaluate_model(trainer.model(), held_scenes, cfg.heads,
                                  dataset_label(files[held])));
  }

  DatasetMetrics avg;
  avg.dataset = "AVG";
  avg.k = rows.front().k;
  for (const auto& r : rows) {
    avg.scene_count += r.scene_count;
    avg.min_ade += r.min_ade;
    avg.min_fde += r.min_fde;
  }
  avg.min_ade /= static_cast<double>(rows.size());
  avg.min_fde /= static_cast<double>(rows.size());
  rows.push_back(avg);
  return rows;
}

}  // namespace vge
