// Command-line front end: train, eval, sweep, oracle-compare, summarize.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uavaoi/experiment.hpp"

namespace fs = std::filesystem;
using namespace uavaoi;

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> policies;
  std::optional<int> episodes;
  std::optional<int> repetitions;
  bool timing = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_policy) {
  cmd->add_option("--config", a.config, "experiment JSON file (defaults apply when omitted)");
  cmd->add_option("--seed", a.seed, "master seed, overrides the config");
  cmd->add_option("--out", a.out, "output directory")->capture_default_str();
  if (with_policy) cmd->add_option("--policy", a.policies, "policies: dqn aoi_greedy distance_round random oracle");
  cmd->add_option("--episodes", a.episodes, "training episodes, overrides the config");
  cmd->add_option("--repetitions", a.repetitions, "deployments per sweep point, overrides the config");
  cmd->add_flag("--timing", a.timing, "record wall-clock milliseconds in metrics.csv");
  cmd->add_flag("--quiet", a.quiet, "no progress output");
}

ExperimentSpec resolve(const CommonArgs& a) {
  ExperimentSpec spec = a.config.empty() ? ExperimentSpec{} : load_spec(a.config);
  if (a.seed) spec.seed = *a.seed;
  if (!a.policies.empty()) spec.policies = a.policies;
  if (a.episodes) spec.train.episodes = *a.episodes;
  if (a.repetitions) spec.repetitions = *a.repetitions;
  spec.validate();
  return spec;
}

RunOptions options(const CommonArgs& a) {
  RunOptions opt;
  opt.out_dir = a.out;
  opt.record_wall_time = a.timing;
  if (!a.quiet) opt.progress = [](const std::string& msg) { std::cerr << "[run] " << msg << '\n'; };
  return opt;
}

void print_aggregate(const std::vector<AggregateRow>& agg) {
  std::printf("%-16s %8s %4s %6s %12s %12s\n", "policy", "R_cells", "N", "count", "mean_return", "mean_J");
  for (const auto& a : agg) {
    std::printf("%-16s %8.3g %4d %6zu %12.4f %12.4f\n", a.policy.c_str(), a.radius_cells, a.num_sensors, a.count,
                a.mean_return, a.mean_avg_aoi);
  }
}

int cmd_train(const CommonArgs& a) {
  ExperimentSpec spec = resolve(a);
  spec.policies = {"dqn"};
  spec.repetitions = 1;
  if (spec.axis != SweepAxis::None) spec.values.resize(1);
  const auto point = sweep_points(spec).front();
  const EpisodeConfig cfg = build_config(spec, point, 0);
  TrainConfig tc = spec.train;
  tc.seed = training_seed(spec, cfg, 0);
  fs::create_directories(a.out);
  const TrainResult res = train(cfg, tc, [&](const EpisodeLog& l) {
    if (!a.quiet && (l.episode + 1) % 100 == 0) {
      std::cerr << "[train] episode " << l.episode + 1 << " J=" << l.avg_aoi << " eps=" << l.epsilon
                << " loss=" << l.mean_loss << '\n';
    }
  });
  save_checkpoint(res.net, (fs::path(a.out) / "qnet.bin").string());
  write_train_log(res.log, fs::path(a.out) / "train_log.csv");
  write_manifest(spec, fs::path(a.out) / "manifest.json");
  const auto rec = greedy_rollout(res.net, cfg);
  std::vector<MetricsRow> rows{{spec.experiment_id, repetition_seed(spec, 0), "dqn", cfg.radius() / cfg.grid.cell_length,
                                cfg.num_sensors(), 0, rec.total_return, rec.avg_aoi, to_string(rec.kind), 0.0}};
  write_metrics(rows, fs::path(a.out) / "metrics.csv");
  std::printf("greedy return %.6f  J %.6f  %s  (network from restart %d, episode %d)\n", rec.total_return,
              rec.avg_aoi, to_string(rec.kind), res.best_restart + 1, res.best_episode + 1);
  return 0;
}

int cmd_eval(const CommonArgs& a, const std::string& checkpoint) {
  const ExperimentSpec spec = resolve(a);
  RunOptions opt = options(a);
  if (!checkpoint.empty()) opt.checkpoint = checkpoint;
  const auto rows = run(spec, opt);
  write_metrics(rows, opt.out_dir / "metrics.csv");
  write_manifest(spec, opt.out_dir / "manifest.json");
  print_aggregate(aggregate(rows));
  return 0;
}

int cmd_sweep(const CommonArgs& a) {
  const ExperimentSpec spec = resolve(a);
  const RunOptions opt = options(a);
  run_sweep(spec, opt);
  print_aggregate(summarize(opt.out_dir / "metrics.csv", opt.out_dir));
  return 0;
}

int cmd_oracle_compare(const CommonArgs& a, bool export_tables) {
  ExperimentSpec spec = resolve(a);
  if (std::find(spec.policies.begin(), spec.policies.end(), "oracle") == spec.policies.end()) {
    spec.policies.insert(spec.policies.begin(), "oracle");
  }
  RunOptions opt = options(a);
  opt.export_value_tables = export_tables;
  const auto rows = run_sweep(spec, opt);
  // J of each policy relative to the optimum on the same deployment.
  std::map<std::tuple<double, int, std::uint64_t>, double> optimum;
  for (const auto& r : rows) {
    if (r.policy == "oracle") optimum[{r.radius_cells, r.num_sensors, r.seed}] = r.avg_aoi;
  }
  std::map<std::string, std::pair<double, int>> ratio;
  for (const auto& r : rows) {
    auto& [sum, n] = ratio[r.policy];
    sum += r.avg_aoi / optimum.at({r.radius_cells, r.num_sensors, r.seed});
    ++n;
  }
  std::printf("%-16s %14s\n", "policy", "mean J/J_opt");
  for (const auto& [policy, v] : ratio) std::printf("%-16s %14.4f\n", policy.c_str(), v.first / v.second);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV age-of-information trajectory and scheduling experiments"};
  app.set_version_flag("--version", std::string(UAVAOI_VERSION));
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, sweep_args, oracle_args;
  std::string checkpoint, metrics;
  std::string summary_out = "out";
  bool export_tables = false;

  auto* train_cmd = app.add_subcommand("train", "train a DQN agent on the first configured deployment");
  add_common(train_cmd, train_args, false);
  auto* eval_cmd = app.add_subcommand("eval", "evaluate policies on every deployment");
  add_common(eval_cmd, eval_args, true);
  eval_cmd->add_option("--checkpoint", checkpoint, "use this network for the dqn policy instead of training");
  auto* sweep_cmd = app.add_subcommand("sweep", "run a sweep and write metrics, manifest and summaries");
  add_common(sweep_cmd, sweep_args, true);
  auto* oracle_cmd = app.add_subcommand("oracle-compare", "compare policies with the exact optimum");
  add_common(oracle_cmd, oracle_args, true);
  oracle_cmd->add_flag("--export-values", export_tables, "write the value table of every instance");
  auto* sum_cmd = app.add_subcommand("summarize", "aggregate a metrics.csv into tables and series");
  sum_cmd->add_option("--metrics", metrics, "metrics.csv to read")->required();
  sum_cmd->add_option("--out", summary_out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*eval_cmd) return cmd_eval(eval_args, checkpoint);
    if (*sweep_cmd) return cmd_sweep(sweep_args);
    if (*oracle_cmd) return cmd_oracle_compare(oracle_args, export_tables);
    if (*sum_cmd) {
      print_aggregate(summarize(metrics, summary_out));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
