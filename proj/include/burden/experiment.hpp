// Batch experiment driver: seeded replications of patient x controller x
// horizon, metric computation against the oracle, CSV/JSON persistence, and
// the single-parameter policy sweep.
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "burden/controllers.hpp"
#include "burden/csv.hpp"
#include "burden/estimator.hpp"
#include "burden/metrics.hpp"
#include "burden/model.hpp"
#include "burden/trajectory.hpp"
#include "burden/value_iteration.hpp"

namespace burden {

struct ControllerSpec {
  ControllerKind kind = ControllerKind::Random;
  double beta = 0.05;    // MleBeta only
  int init_period = 10;  // Thompson only
  std::string label;     // file-name-safe identifier, unique within a config
};

struct ExperimentConfig {
  PatientParams patient;
  std::vector<ControllerSpec> controllers;
  std::vector<int> horizons;
  int replications = 1;
  std::uint64_t master_seed = 0;
  ViSettings vi;
  std::vector<double> lambda_set;
  std::vector<double> b_set;
  int refit_every = 1;
  std::string output_dir;
  int jobs = 1;
};

struct ReplicationData {
  int replication = 0;
  std::uint64_t sim_seed = 0;
  bool failed = false;
  std::string error;
  Trajectory trajectory;
  MetricsSeries metrics;
  // Per-day controller diagnostics; NaN / -1 on days without an estimate.
  std::vector<double> believed_state;
  std::vector<int> tuple_index;
  std::vector<double> weight_on_true;
  std::vector<std::uint8_t> explored;
  std::vector<std::uint8_t> estimation_failed;
};

struct ControllerRun {
  ControllerSpec spec;
  int horizon = 0;
  std::vector<ReplicationData> replications;
};

struct ExperimentResult {
  ExperimentConfig config;
  PolicyTable oracle;
  std::optional<std::size_t> true_tuple_index;  // true tuple's slot in the grid, if present
  std::vector<ControllerRun> runs;              // controller-major, then horizon
  int failures = 0;
  std::vector<std::string> failure_messages;
};

inline constexpr int kComparabilityDay = 200;       // 1-based day of the spread check
inline constexpr double kComparabilitySpread = 0.15;

namespace detail {

inline ControllerConfig to_controller_config(const ExperimentConfig& cfg,
                                             const ControllerSpec& spec) {
  ControllerConfig c;
  c.kind = spec.kind;
  c.beta = spec.beta;
  c.init_period = spec.init_period;
  if (spec.kind == ControllerKind::MleBeta || spec.kind == ControllerKind::Thompson) {
    c.subproblem_grid = SubproblemGrid::build(cfg.lambda_set, cfg.b_set);
  }
  c.vi = cfg.vi;
  c.rewards = {cfg.patient.gamma_low, cfg.patient.gamma_high, cfg.patient.alpha};
  c.refit_every = cfg.refit_every;
  return c;
}

inline std::string default_label(const ControllerSpec& spec) {
  switch (spec.kind) {
    case ControllerKind::MleBeta: return "mle_" + format_double(spec.beta);
    case ControllerKind::Thompson: return "thompson_T" + std::to_string(spec.init_period);
    default: return to_string(spec.kind);
  }
}

inline void validate_config(const ExperimentConfig& cfg) {
  PatientParams::checked(cfg.patient);
  if (cfg.controllers.empty()) throw std::invalid_argument("no controllers configured");
  if (cfg.horizons.empty()) throw std::invalid_argument("no horizons configured");
  for (int h : cfg.horizons) {
    if (h < 1) throw std::invalid_argument("horizons must be >= 1");
  }
  if (cfg.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (cfg.output_dir.empty()) throw std::invalid_argument("output_dir must be set");
  for (const auto& spec : cfg.controllers) to_controller_config(cfg, spec).validate();
  for (std::size_t i = 0; i < cfg.controllers.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.controllers.size(); ++j) {
      if (cfg.controllers[i].label == cfg.controllers[j].label) {
        throw std::invalid_argument("duplicate controller label: " + cfg.controllers[i].label);
      }
    }
  }
}

inline ReplicationData run_replication(const ExperimentConfig& cfg, const ControllerSpec& spec,
                                       std::size_t controller_idx, std::size_t horizon_idx,
                                       int horizon, int rep, const PolicyTable& oracle,
                                       std::optional<std::size_t> true_tuple) {
  ReplicationData data;
  data.replication = rep;
  const auto ci = static_cast<std::uint64_t>(controller_idx);
  const auto hi = static_cast<std::uint64_t>(horizon_idx);
  const auto r = static_cast<std::uint64_t>(rep);
  data.sim_seed = derive_seed(cfg.master_seed, {ci, hi, r, 0});
  auto controller_rng = Xoshiro256pp::derive(cfg.master_seed, {ci, hi, r, 1});

  try {
    const ControllerConfig ccfg = to_controller_config(cfg, spec);
    auto controller = make_controller(ccfg, controller_rng, &cfg.patient);
    auto observe_day = [&](const TrajectoryRecord&, const Controller& c) {
      const ControllerSnapshot snap = c.snapshot();
      data.believed_state.push_back(snap.believed_state.value_or(std::nan("")));
      data.tuple_index.push_back(snap.tuple_index ? static_cast<int>(*snap.tuple_index) : -1);
      double w = std::nan("");
      if (true_tuple && *true_tuple < snap.posterior_weights.size()) {
        w = snap.posterior_weights[*true_tuple];
      }
      data.weight_on_true.push_back(w);
      data.explored.push_back(snap.explored ? 1 : 0);
      data.estimation_failed.push_back(snap.estimation_failed ? 1 : 0);
    };
    data.trajectory = run_trajectory(cfg.patient, *controller, horizon, data.sim_seed, observe_day);
    data.metrics = compute_metrics(data.trajectory, oracle);
  } catch (const std::exception& e) {
    data.failed = true;
    data.error = e.what();
  }
  return data;
}

inline void write_steps_csv(const std::filesystem::path& path, const ControllerRun& run) {
  std::string out;
  out += "replication,day,action,adhered,reward,latent_state,oracle_action,is_optimal,"
         "controller_believed_state,mle_tuple_index,posterior_weight_on_true_tuple\n";
  for (const ReplicationData& rep : run.replications) {
    if (rep.failed) continue;
    for (std::size_t t = 0; t < rep.trajectory.records.size(); ++t) {
      const TrajectoryRecord& rec = rep.trajectory.records[t];
      out += std::to_string(rep.replication);
      out += ',';
      out += std::to_string(rec.day);
      out += ',';
      out += to_string(rec.action);
      out += ',';
      out += rec.adhered ? '1' : '0';
      out += ',';
      append_double(out, rec.reward);
      out += ',';
      append_double(out, rec.latent_state_before);
      out += ',';
      out += to_string(rep.metrics.oracle_actions[t]);
      out += ',';
      out += rep.metrics.optimal[t] ? '1' : '0';
      out += ',';
      append_optional(out, rep.believed_state[t]);
      out += ',';
      if (rep.tuple_index[t] >= 0) out += std::to_string(rep.tuple_index[t]);
      out += ',';
      append_optional(out, rep.weight_on_true[t]);
      out += '\n';
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << out;
}

// Mean of a per-day series across non-failed replications.
inline std::vector<double> mean_across(const ControllerRun& run,
                                       const std::vector<double> MetricsSeries::* series,
                                       int horizon) {
  std::vector<double> mean(static_cast<std::size_t>(horizon), 0.0);
  int count = 0;
  for (const ReplicationData& rep : run.replications) {
    if (rep.failed) continue;
    ++count;
    const auto& v = rep.metrics.*series;
    for (std::size_t t = 0; t < v.size(); ++t) mean[t] += v[t];
  }
  if (count > 0) {
    for (double& v : mean) v /= count;
  }
  return mean;
}

inline void write_curves_csv(const std::filesystem::path& path, const ControllerRun& run) {
  const auto reward = mean_across(run, &MetricsSeries::cumulative_avg_reward, run.horizon);
  const auto optimal = mean_across(run, &MetricsSeries::cumulative_optimal_fraction, run.horizon);
  const auto moving = mean_across(run, &MetricsSeries::moving_avg_optimal_fraction, run.horizon);
  std::string out;
  out += "day,mean_cumulative_avg_reward,mean_cumulative_optimal_fraction,"
         "mean_moving_avg_optimal_fraction\n";
  for (std::size_t t = 0; t < reward.size(); ++t) {
    out += std::to_string(t);
    out += ',';
    append_double(out, reward[t]);
    out += ',';
    append_double(out, optimal[t]);
    out += ',';
    append_double(out, moving[t]);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << out;
}

}  // namespace detail

// Day-200 moving-average optimal fraction per replication, NaN on failures.
inline std::vector<double> day200_moving_avg(const ControllerRun& run) {
  std::vector<double> out;
  for (const ReplicationData& rep : run.replications) {
    if (rep.failed || rep.metrics.moving_avg_optimal_fraction.size() < kComparabilityDay) {
      out.push_back(std::nan(""));
    } else {
      out.push_back(rep.metrics.moving_avg_optimal_fraction[kComparabilityDay - 1]);
    }
  }
  return out;
}

inline nlohmann::ordered_json summary_json(const ExperimentResult& result) {
  using json = nlohmann::ordered_json;
  const ExperimentConfig& cfg = result.config;
  json summary;
  summary["master_seed"] = cfg.master_seed;
  summary["replications"] = cfg.replications;
  summary["patient"] = {{"c_low", cfg.patient.c_low},
                        {"c_high", cfg.patient.c_high},
                        {"lambda_low", cfg.patient.lambda_low},
                        {"lambda_high", cfg.patient.lambda_high},
                        {"b", cfg.patient.b},
                        {"x0", cfg.patient.x0},
                        {"gamma_low", cfg.patient.gamma_low},
                        {"gamma_high", cfg.patient.gamma_high},
                        {"alpha", cfg.patient.alpha}};
  if (result.true_tuple_index) {
    summary["true_tuple_index"] = *result.true_tuple_index;
  } else {
    summary["true_tuple_index"] = nullptr;
  }
  summary["failures"] = result.failures;

  json results = json::array();
  for (const ControllerRun& run : result.runs) {
    json entry;
    entry["controller"] = run.spec.label;
    entry["kind"] = to_string(run.spec.kind);
    entry["horizon"] = run.horizon;
    int failed = 0;
    int est_failure_days = 0;
    for (const auto& rep : run.replications) {
      failed += rep.failed ? 1 : 0;
      for (auto flag : rep.estimation_failed) est_failure_days += flag;
    }
    entry["failed_replications"] = failed;
    entry["estimation_failure_days"] = est_failure_days;
    const auto reward = detail::mean_across(run, &MetricsSeries::cumulative_avg_reward,
                                            run.horizon);
    const auto optimal = detail::mean_across(run, &MetricsSeries::cumulative_optimal_fraction,
                                             run.horizon);
    const auto moving = detail::mean_across(run, &MetricsSeries::moving_avg_optimal_fraction,
                                            run.horizon);
    entry["final_mean_cumulative_avg_reward"] = reward.empty() ? 0.0 : reward.back();
    entry["final_mean_cumulative_optimal_fraction"] = optimal.empty() ? 0.0 : optimal.back();
    entry["final_mean_moving_avg_optimal_fraction"] = moving.empty() ? 0.0 : moving.back();
    if (run.horizon >= kComparabilityDay) {
      const auto day200 = day200_moving_avg(run);
      double mean = 0.0;
      int count = 0;
      for (double v : day200) {
        if (!std::isnan(v)) {
          mean += v;
          ++count;
        }
      }
      entry["day200_moving_avg_mean"] = count > 0 ? mean / count : 0.0;
      entry["day200_moving_avg_per_replication"] = day200;
    } else {
      entry["day200_moving_avg_mean"] = nullptr;
    }
    results.push_back(std::move(entry));
  }
  summary["results"] = std::move(results);

  // Spread of the day-200 moving average across the adaptive controllers,
  // per replication: the comparability check behind the "similar within
  // roughly 200 days" observation.
  json comparability = json::array();
  for (std::size_t hi = 0; hi < cfg.horizons.size(); ++hi) {
    if (cfg.horizons[hi] < kComparabilityDay) continue;
    std::vector<const ControllerRun*> adaptive;
    for (const ControllerRun& run : result.runs) {
      if (run.horizon == cfg.horizons[hi] &&
          (run.spec.kind == ControllerKind::MleBeta || run.spec.kind == ControllerKind::Thompson)) {
        adaptive.push_back(&run);
      }
    }
    if (adaptive.size() < 2) continue;
    std::vector<std::vector<double>> series;
    series.reserve(adaptive.size());
    for (const auto* run : adaptive) series.push_back(day200_moving_avg(*run));
    int within = 0, valid = 0;
    for (int rep = 0; rep < cfg.replications; ++rep) {
      double lo = 1.0, hi_v = 0.0;
      bool ok = true;
      for (const auto& s : series) {
        const double v = s[static_cast<std::size_t>(rep)];
        if (std::isnan(v)) {
          ok = false;
          break;
        }
        lo = std::min(lo, v);
        hi_v = std::max(hi_v, v);
      }
      if (!ok) continue;
      ++valid;
      within += (hi_v - lo) <= kComparabilitySpread ? 1 : 0;
    }
    json block;
    block["horizon"] = cfg.horizons[hi];
    json labels = json::array();
    for (const auto* run : adaptive) labels.push_back(run->spec.label);
    block["controllers"] = std::move(labels);
    block["spread_threshold"] = kComparabilitySpread;
    block["valid_replications"] = valid;
    block["fraction_within_threshold"] =
        valid > 0 ? static_cast<double>(within) / valid : 0.0;
    comparability.push_back(std::move(block));
  }
  summary["day200_comparability"] = std::move(comparability);
  return summary;
}

// Runs every (controller, horizon, replication) task with derived seeds and
// persists per-step CSVs, aggregate curves, and summary.json. Reruns with the
// same config are byte-identical regardless of the job count.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  for (auto& spec : cfg.controllers) {
    if (spec.label.empty()) spec.label = detail::default_label(spec);
  }
  detail::validate_config(cfg);

  ExperimentResult result;
  result.config = cfg;
  const double x_bar = state_bound(cfg.patient);
  result.oracle = oracle_policy(cfg.patient, cfg.vi.to_grid(x_bar));
  if (!cfg.lambda_set.empty()) {
    const auto grid = SubproblemGrid::build(cfg.lambda_set, cfg.b_set);
    result.true_tuple_index =
        grid.find(cfg.patient.lambda_low, cfg.patient.lambda_high, cfg.patient.b);
  }

  struct Task {
    std::size_t controller_idx, horizon_idx;
    int rep;
  };
  std::vector<Task> tasks;
  for (std::size_t ci = 0; ci < cfg.controllers.size(); ++ci) {
    for (std::size_t hi = 0; hi < cfg.horizons.size(); ++hi) {
      for (int rep = 0; rep < cfg.replications; ++rep) tasks.push_back({ci, hi, rep});
    }
  }

  std::vector<ReplicationData> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const Task& t = tasks[i];
      slots[i] = detail::run_replication(cfg, cfg.controllers[t.controller_idx],
                                         t.controller_idx, t.horizon_idx,
                                         cfg.horizons[t.horizon_idx], t.rep, result.oracle,
                                         result.true_tuple_index);
    }
  };
  if (cfg.jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < cfg.jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::size_t slot = 0;
  for (std::size_t ci = 0; ci < cfg.controllers.size(); ++ci) {
    for (std::size_t hi = 0; hi < cfg.horizons.size(); ++hi) {
      ControllerRun run;
      run.spec = cfg.controllers[ci];
      run.horizon = cfg.horizons[hi];
      for (int rep = 0; rep < cfg.replications; ++rep) {
        ReplicationData& data = slots[slot++];
        if (data.failed) {
          ++result.failures;
          result.failure_messages.push_back(run.spec.label + " h" + std::to_string(run.horizon) +
                                            " rep " + std::to_string(data.replication) + ": " +
                                            data.error);
        }
        run.replications.push_back(std::move(data));
      }
      result.runs.push_back(std::move(run));
    }
  }

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  for (const ControllerRun& run : result.runs) {
    const std::string stem = run.spec.label + "_h" + std::to_string(run.horizon);
    detail::write_steps_csv(dir / ("steps_" + stem + ".csv"), run);
    detail::write_curves_csv(dir / ("curves_" + stem + ".csv"), run);
  }
  std::ofstream f(dir / "summary.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot open summary.json for writing");
  f << summary_json(result).dump(2) << '\n';
  return result;
}

// ---------------------------------------------------------------------------
// Policy sweep (one VI solve per parameter value)

struct SweepConfig {
  PatientParams base;
  std::string parameter;
  std::vector<double> values;
  ViSettings vi;
  std::string output_dir;
};

struct SweepEntry {
  double value = 0.0;
  VIResult vi;
  PolicyStructure structure;
};

namespace detail {

inline PatientParams with_parameter(PatientParams p, const std::string& name, double value) {
  if (name == "c_low") p.c_low = value;
  else if (name == "c_high") p.c_high = value;
  else if (name == "lambda_low") p.lambda_low = value;
  else if (name == "lambda_high") p.lambda_high = value;
  else if (name == "b") p.b = value;
  else if (name == "x0") p.x0 = value;
  else if (name == "gamma_low") p.gamma_low = value;
  else if (name == "gamma_high") p.gamma_high = value;
  else if (name == "alpha") p.alpha = value;
  else throw std::invalid_argument("unknown sweep parameter: " + name);
  return PatientParams::checked(p);
}

}  // namespace detail

inline std::vector<SweepEntry> run_policy_sweep(const SweepConfig& cfg) {
  if (cfg.values.empty()) throw std::invalid_argument("sweep needs at least one value");
  std::vector<SweepEntry> out;
  for (double value : cfg.values) {
    const PatientParams params = detail::with_parameter(cfg.base, cfg.parameter, value);
    SweepEntry entry;
    entry.value = value;
    entry.vi = value_iteration(params, cfg.vi.to_grid(state_bound(params)));
    entry.structure = classify_policy(entry.vi.policy);
    out.push_back(std::move(entry));
  }
  return out;
}

// Emits rows sufficient to regenerate the policy-structure figure: the full
// policy/value tables plus one classification row per swept value.
inline std::vector<SweepEntry> emit_policy_sweep(const SweepConfig& cfg) {
  auto entries = run_policy_sweep(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  std::string tables;
  tables += cfg.parameter + ",x,v,q_low,q_high,action\n";
  for (const SweepEntry& e : entries) {
    const auto& policy = e.vi.policy;
    for (int i = 0; i < policy.grid.n_points; ++i) {
      append_double(tables, e.value);
      tables += ',';
      append_double(tables, policy.grid.node(i));
      tables += ',';
      append_double(tables, e.vi.value.values[static_cast<std::size_t>(i)]);
      tables += ',';
      append_double(tables, policy.q_low[static_cast<std::size_t>(i)]);
      tables += ',';
      append_double(tables, policy.q_high[static_cast<std::size_t>(i)]);
      tables += ',';
      tables += to_string(policy.actions[static_cast<std::size_t>(i)]);
      tables += '\n';
    }
  }
  std::ofstream tf(dir / "sweep_policies.csv", std::ios::binary);
  if (!tf) throw std::runtime_error("cannot open sweep_policies.csv");
  tf << tables;

  std::string summary;
  summary += cfg.parameter + ",classification,thresholds\n";
  for (const SweepEntry& e : entries) {
    append_double(summary, e.value);
    summary += ',';
    summary += to_string(e.structure.classification);
    summary += ',';
    for (std::size_t i = 0; i < e.structure.thresholds.size(); ++i) {
      if (i) summary += ';';
      append_double(summary, e.structure.thresholds[i]);
    }
    summary += '\n';
  }
  std::ofstream sf(dir / "sweep_classifications.csv", std::ios::binary);
  if (!sf) throw std::runtime_error("cannot open sweep_classifications.csv");
  sf << summary;
  return entries;
}

}  // namespace burden
