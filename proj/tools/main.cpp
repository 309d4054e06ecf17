// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: training, evaluation, the constant-velocity
// baseline, effective-resistance graph diagnostics, gate-weight export,
// and the leave-one-out convenience wrapper.
//
// Exit codes: 0 success, 2 input/configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vge/checkpoint.hpp"
#include "vge/config.hpp"
#include "vge/errors.hpp"
#include "vge/graph.hpp"
#include "vge/model.hpp"
#include "vge/router.hpp"
#include "vge/scene.hpp"
#include "vge/trainer.hpp"

namespace fs = std::filesystem;
using namespace vge;

namespace {

void emit(const std::string& text, const std::string& out_file) {
  if (out_file.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_file);
  if (!out) throw ParseError("cannot write " + out_file);
  out << text;
}

InteractionGraph demo_chain_graph() {
  InteractionGraph g;
  g.n_real = 5;
  g.mask.assign(25, 0);
  for (std::int64_t i = 0; i + 1 < 5; ++i) {
    g.edges.emplace_back(i, i + 1);
    g.mask[static_cast<std::size_t>(i * 5 + i + 1)] = 1;
  }
  return g;
}

int run_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir, const std::string& resume) {
  RunConfig config = RunConfig::from_json_file(config_path);
  if (seed) config.seed = *seed;

  Trainer trainer(config, out_dir);
  if (!resume.empty()) trainer.resume_from(resume);
  try {
    auto stats = trainer.run();
    std::cout << epoch_log_csv(stats);
  } catch (const NumericalError& e) {
    const fs::path dump = fs::path(out_dir) / "failure_dump.json";
    std::ofstream out(dump);
    out << e.diagnostic() << '\n';
    std::cerr << "error: " << e.what() << " (offending batch written to " << dump.string()
              << ")\n";
    return 3;
  }
  std::cerr << "checkpoint: " << (fs::path(out_dir) / "checkpoint.json").string() << '\n';
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& data_path,
             std::optional<std::int64_t> k, const std::string& out_file) {
  auto loaded = load_checkpoint(checkpoint_path);
  const auto& cfg = loaded.config;
  auto scenes = load_trajectory_file(data_path, cfg.t_obs, cfg.t_pred, cfg.stride);
  const std::int64_t kk = k.value_or(cfg.heads);
  auto row = evaluate_model(*loaded.model, scenes, kk, fs::path(data_path).filename().string());
  emit(metrics_csv(std::vector<DatasetMetrics>{row}), out_file);
  return 0;
}

int run_baseline(const std::string& data_path, std::int64_t t_obs, std::int64_t t_pred,
                 std::int64_t stride, const std::string& out_file) {
  auto scenes = load_trajectory_file(data_path, t_obs, t_pred, stride);
  auto row = evaluate_baseline(scenes, fs::path(data_path).filename().string());
  emit(metrics_csv(std::vector<DatasetMetrics>{row}), out_file);
  return 0;
}

int run_analyze(bool demo_chain, const std::string& data_path,
                const std::string& checkpoint_path, const std::string& config_path,
                std::optional<std::int64_t> virtual_count, std::optional<std::int64_t> k,
                std::uint64_t seed, const std::string& out_file) {
  if (demo_chain) {
    auto rows = resistance_report(demo_chain_graph(), virtual_count.value_or(1));
    emit(resistance_report_csv(rows), out_file);
    return 0;
  }
  if (data_path.empty())
    throw ContractError("analyze-graph needs --data unless --demo-chain is set");

  RunConfig config;
  std::unique_ptr<TrajectoryModel> model;
  if (!checkpoint_path.empty()) {
    auto loaded = load_checkpoint(checkpoint_path);
    config = loaded.config;
    model = std::move(loaded.model);
  } else {
    if (!config_path.empty()) config = RunConfig::from_json_file(config_path);
    config.seed = config_path.empty() ? seed : config.seed;
    model = std::make_unique<TrajectoryModel>(config.model_config(), config.seed);
  }

  auto scenes = load_trajectory_file(data_path, config.t_obs, config.t_pred, config.stride);
  const std::int64_t v = virtual_count.value_or(config.virtual_count);
  const std::int64_t kn = k.value_or(config.k_neighbors);
  std::vector<ResistanceRow> rows;
  for (const auto& scene : scenes) {
    auto graph = knn_graph(model->initial_embeddings(scene), kn);
    auto report = resistance_report(graph, v);
    rows.insert(rows.end(), report.begin(), report.end());
  }
  emit(resistance_report_csv(rows), out_file);
  return 0;
}

int run_export_gates(const std::string& checkpoint_path, const std::string& data_path,
                     const std::string& out_file) {
  auto loaded = load_checkpoint(checkpoint_path);
  const auto& cfg = loaded.config;
  auto scenes = load_trajectory_file(data_path, cfg.t_obs, cfg.t_pred, cfg.stride);
  auto rows = export_gates(*loaded.model, scenes);
  emit(gates_csv(rows), out_file);
  return 0;
}

int run_leave_one_out(const std::vector<std::string>& files, const std::string& config_path,
                      const std::string& out_dir) {
  RunConfig config = RunConfig::from_json_file(config_path);
  auto rows = leave_one_out(files, config, out_dir);
  std::cout << metrics_csv(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual-graph expert router for pedestrian trajectory prediction"};
  app.require_subcommand(1);

  // train
  std::string train_config, train_out = "run", train_resume;
  std::optional<std::uint64_t> train_seed;
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", train_config, "JSON run config")->required();
  train->add_option("--seed", train_seed, "override the config seed");
  train->add_option("--out", train_out, "output directory");
  train->add_option("--resume", train_resume, "checkpoint to continue from");

  // eval
  std::string eval_ckpt, eval_data, eval_out;
  std::optional<std::int64_t> eval_k;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--k", eval_k, "best-of-k metric (default: config heads)");
  eval->add_option("--out", eval_out, "write CSV here instead of stdout");

  // baseline
  std::string base_data, base_out;
  std::int64_t base_tobs = 8, base_tpred = 12, base_stride = 1;
  auto* baseline = app.add_subcommand("baseline", "constant-velocity extrapolation metrics");
  baseline->add_option("--data", base_data)->required();
  baseline->add_option("--t-obs", base_tobs);
  baseline->add_option("--t-pred", base_tpred);
  baseline->add_option("--stride", base_stride);
  baseline->add_option("--out", base_out);

  // analyze-graph
  bool demo_chain = false;
  std::string an_data, an_ckpt, an_config, an_out;
  std::optional<std::int64_t> an_v, an_k;
  std::uint64_t an_seed = 1;
  auto* analyze = app.add_subcommand("analyze-graph", "effective-resistance report");
  analyze->add_flag("--demo-chain", demo_chain, "built-in 5-node chain demonstration");
  analyze->add_option("--data", an_data);
  analyze->add_option("--checkpoint", an_ckpt, "use a trained model's embeddings");
  analyze->add_option("--config", an_config);
  analyze->add_option("--virtual", an_v, "virtual hub count");
  analyze->add_option("--k", an_k, "kNN neighbor count");
  analyze->add_option("--seed", an_seed, "fresh-model seed when no checkpoint/config given");
  analyze->add_option("--out", an_out);

  // export-gates
  std::string gates_ckpt, gates_data, gates_out;
  auto* gates = app.add_subcommand("export-gates", "per-agent expert gate weights");
  gates->add_option("--checkpoint", gates_ckpt)->required();
  gates->add_option("--data", gates_data)->required();
  gates->add_option("--out", gates_out);

  // leave-one-out
  std::vector<std::string> loo_files;
  std::string loo_config, loo_out = "loo";
  auto* loo = app.add_subcommand("leave-one-out",
                                 "train on all subsets but one, evaluate on the held-out one");
  loo->add_option("--data", loo_files, "subset files")->required()->expected(-2);
  loo->add_option("--config", loo_config)->required();
  loo->add_option("--out", loo_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(train_config, train_seed, train_out, train_resume);
    if (*eval) return run_eval(eval_ckpt, eval_data, eval_k, eval_out);
    if (*baseline) return run_baseline(base_data, base_tobs, base_tpred, base_stride, base_out);
    if (*analyze)
      return run_analyze(demo_chain, an_data, an_ckpt, an_config, an_v, an_k, an_seed, an_out);
    if (*gates) return run_export_gates(gates_ckpt, gates_data, gates_out);
    if (*loo) return run_leave_one_out(loo_files, loo_config, loo_out);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
