// JSON config loading for the experiment driver. Patient parameters have no
// defaults: every field must be present.
#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "burden/experiment.hpp"

namespace burden {

namespace detail {

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }
  return j;
}

inline PatientParams patient_from_json(const nlohmann::json& j) {
  auto require = [&](const char* key) -> double {
    if (!j.contains(key)) {
      throw std::invalid_argument(std::string("patient config missing required key: ") + key);
    }
    return j.at(key).get<double>();
  };
  return PatientParams::checked({.c_low = require("c_low"),
                                 .c_high = require("c_high"),
                                 .lambda_low = require("lambda_low"),
                                 .lambda_high = require("lambda_high"),
                                 .b = require("b"),
                                 .x0 = require("x0"),
                                 .gamma_low = require("gamma_low"),
                                 .gamma_high = require("gamma_high"),
                                 .alpha = require("alpha")});
}

inline ControllerKind kind_from_string(const std::string& s) {
  if (s == "mle_beta") return ControllerKind::MleBeta;
  if (s == "thompson") return ControllerKind::Thompson;
  if (s == "random") return ControllerKind::Random;
  if (s == "reactive") return ControllerKind::Reactive;
  if (s == "oracle") return ControllerKind::Oracle;
  throw std::invalid_argument("unknown controller kind: " + s);
}

inline ViSettings vi_from_json(const nlohmann::json& j) {
  ViSettings vi;
  if (j.contains("n_points")) vi.n_points = j.at("n_points").get<int>();
  if (j.contains("tolerance")) vi.tolerance = j.at("tolerance").get<double>();
  if (j.contains("max_iterations")) vi.max_iterations = j.at("max_iterations").get<int>();
  return vi;
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.patient = detail::patient_from_json(j.at("patient"));
  for (const auto& c : j.at("controllers")) {
    ControllerSpec spec;
    spec.kind = detail::kind_from_string(c.at("kind").get<std::string>());
    if (spec.kind == ControllerKind::MleBeta) spec.beta = c.at("beta").get<double>();
    if (spec.kind == ControllerKind::Thompson) {
      spec.init_period = c.at("init_period").get<int>();
    }
    if (c.contains("label")) spec.label = c.at("label").get<std::string>();
    cfg.controllers.push_back(std::move(spec));
  }
  cfg.horizons = j.at("horizons").get<std::vector<int>>();
  cfg.replications = j.at("replications").get<int>();
  cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("vi")) cfg.vi = detail::vi_from_json(j.at("vi"));
  if (j.contains("estimation")) {
    const auto& e = j.at("estimation");
    cfg.lambda_set = e.at("lambda_set").get<std::vector<double>>();
    cfg.b_set = e.at("b_set").get<std::vector<double>>();
    if (e.contains("refit_every")) cfg.refit_every = e.at("refit_every").get<int>();
  } else {
    for (const auto& spec : cfg.controllers) {
      if (spec.kind == ControllerKind::MleBeta || spec.kind == ControllerKind::Thompson) {
        throw std::invalid_argument("adaptive controllers need an estimation section");
      }
    }
  }
  cfg.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(detail::load_json_file(path));
}

inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  SweepConfig cfg;
  cfg.base = detail::patient_from_json(j.at("base"));
  cfg.parameter = j.at("parameter").get<std::string>();
  cfg.values = j.at("values").get<std::vector<double>>();
  if (j.contains("vi")) cfg.vi = detail::vi_from_json(j.at("vi"));
  cfg.output_dir = j.at("output_dir").get<std::string>();
  return cfg;
}

inline SweepConfig load_sweep_config(const std::string& path) {
  return sweep_config_from_json(detail::load_json_file(path));
}

// Rebuilds trajectories from a per-step CSV and recomputes the metric series
// against the oracle for the config's patient; a consistency check for stored
// results.
inline void recompute_metrics_csv(const ExperimentConfig& cfg, const std::string& steps_path,
                                  const std::string& out_path) {
  std::ifstream in(steps_path);
  if (!in) throw std::invalid_argument("cannot open steps file: " + steps_path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty steps file");

  std::vector<Trajectory> trajectories;
  std::vector<int> rep_ids;
  int current_rep = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() < 8) throw std::invalid_argument("malformed steps row: " + line);
    const int rep = std::stoi(fields[0]);
    if (rep != current_rep) {
      trajectories.push_back({});
      trajectories.back().params = cfg.patient;
      rep_ids.push_back(rep);
      current_rep = rep;
    }
    TrajectoryRecord rec;
    rec.day = std::stoi(fields[1]);
    rec.action = fields[2] == "high" ? Action::High : Action::Low;
    rec.adhered = fields[3] == "1";
    rec.reward = parse_double(fields[4]);
    rec.latent_state_before = parse_double(fields[5]);
    trajectories.back().records.push_back(rec);
  }

  const PolicyTable oracle = oracle_policy(cfg.patient, cfg.vi.to_grid(state_bound(cfg.patient)));
  std::string out;
  out += "replication,day,cumulative_avg_reward,cumulative_optimal_fraction,"
         "moving_avg_optimal_fraction\n";
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    const MetricsSeries m = compute_metrics(trajectories[r], oracle);
    for (std::size_t t = 0; t < m.cumulative_avg_reward.size(); ++t) {
      out += std::to_string(rep_ids[r]);
      out += ',';
      out += std::to_string(t);
      out += ',';
      append_double(out, m.cumulative_avg_reward[t]);
      out += ',';
      append_double(out, m.cumulative_optimal_fraction[t]);
      out += ',';
      append_double(out, m.moving_avg_optimal_fraction[t]);
      out += '\n';
    }
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + out_path);
  f << out;
}

}  // namespace burden
