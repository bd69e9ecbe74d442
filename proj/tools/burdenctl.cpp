// Command-line driver: `run` executes a seeded experiment config, `sweep`
// emits policy tables for a single-parameter sweep, `metrics` recomputes
// metric series from stored per-step CSVs.
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "burden/config_json.hpp"
#include "burden/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Adaptive treatment burden selection toolkit"};
  app.require_subcommand(1);

  std::string run_config;
  std::string run_output;
  int run_jobs = 0;
  std::uint64_t run_seed = 0;
  bool run_seed_set = false;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", run_config, "Experiment config (JSON)")->required();
  run->add_option("--output-dir", run_output, "Override the config's output directory");
  run->add_option("--jobs", run_jobs, "Worker threads (default: config value)");
  run->add_option("--master-seed", run_seed, "Override the config's master seed")
      ->each([&](const std::string&) { run_seed_set = true; });

  std::string sweep_config;
  std::string sweep_output;
  auto* sweep = app.add_subcommand("sweep", "Emit policy tables for a parameter sweep");
  sweep->add_option("config", sweep_config, "Sweep config (JSON)")->required();
  sweep->add_option("--output-dir", sweep_output, "Override the config's output directory");

  std::string metrics_config;
  std::string metrics_steps;
  std::string metrics_out;
  auto* metrics = app.add_subcommand("metrics", "Recompute metrics from a per-step CSV");
  metrics->add_option("--config", metrics_config, "Experiment config (JSON)")->required();
  metrics->add_option("--steps", metrics_steps, "Per-step CSV produced by `run`")->required();
  metrics->add_option("--out", metrics_out, "Output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      burden::ExperimentConfig cfg = burden::load_experiment_config(run_config);
      if (!run_output.empty()) cfg.output_dir = run_output;
      if (run_jobs > 0) cfg.jobs = run_jobs;
      if (run_seed_set) cfg.master_seed = run_seed;
      const burden::ExperimentResult result = burden::run_experiment(cfg);
      for (const auto& msg : result.failure_messages) {
        std::fprintf(stderr, "replication failed: %s\n", msg.c_str());
      }
      std::printf("wrote results for %zu controller/horizon pairs to %s (%d failed replications)\n",
                  result.runs.size(), cfg.output_dir.c_str(), result.failures);
      return result.failures == 0 ? 0 : 1;
    }
    if (sweep->parsed()) {
      burden::SweepConfig cfg = burden::load_sweep_config(sweep_config);
      if (!sweep_output.empty()) cfg.output_dir = sweep_output;
      const auto entries = burden::emit_policy_sweep(cfg);
      for (const auto& e : entries) {
        std::string thresholds;
        for (std::size_t i = 0; i < e.structure.thresholds.size(); ++i) {
          if (i) thresholds += ", ";
          thresholds += burden::format_double(e.structure.thresholds[i]);
        }
        std::printf("%s=%s -> %s%s%s\n", cfg.parameter.c_str(),
                    burden::format_double(e.value).c_str(),
                    burden::to_string(e.structure.classification),
                    thresholds.empty() ? "" : " at ", thresholds.c_str());
      }
      return 0;
    }
    if (metrics->parsed()) {
      const burden::ExperimentConfig cfg = burden::load_experiment_config(metrics_config);
      burden::recompute_metrics_csv(cfg, metrics_steps, metrics_out);
      std::printf("wrote %s\n", metrics_out.c_str());
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
