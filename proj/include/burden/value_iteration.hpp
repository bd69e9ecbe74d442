// Value iteration for the full-information burden selection problem on a
// uniform grid over [0, x_bar], with policy extraction and threshold
// classification.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "burden/model.hpp"

namespace burden {

struct GridSpec {
  int n_points = 3000;
  double x_max = 0.0;
  double tolerance = 1e-3;  // sup-norm stopping threshold
  int max_iterations = 10000;

  static GridSpec checked(GridSpec g) {
    if (g.n_points < 2) throw std::invalid_argument("grid needs at least 2 points");
    if (!(g.x_max > 0.0)) throw std::invalid_argument("grid x_max must be positive");
    if (!(g.tolerance > 0.0)) throw std::invalid_argument("grid tolerance must be positive");
    if (g.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    return g;
  }

  double spacing() const noexcept { return x_max / (n_points - 1); }
  double node(int i) const noexcept { return x_max * i / (n_points - 1); }

  bool matches(const GridSpec& o) const noexcept {
    return n_points == o.n_points && x_max == o.x_max;
  }
};

namespace detail {

// Piecewise-linear evaluation on a uniform grid, clamped at the endpoints.
inline double interp(const GridSpec& grid, const std::vector<double>& values, double x) {
  if (x <= 0.0) return values.front();
  if (x >= grid.x_max) return values.back();
  const double pos = x / grid.spacing();
  auto i = static_cast<std::size_t>(pos);
  if (i >= values.size() - 1) i = values.size() - 2;
  const double w = pos - static_cast<double>(i);
  return values[i] * (1.0 - w) + values[i + 1] * w;
}

}  // namespace detail

struct ValueFunction {
  GridSpec grid;
  std::vector<double> values;

  double operator()(double x) const { return detail::interp(grid, values, x); }
};

struct PolicyTable {
  GridSpec grid;
  std::vector<Action> actions;
  std::vector<double> q_low;
  std::vector<double> q_high;

  // Greedy action at an arbitrary state from interpolated Q values; exact
  // ties resolve to Low (lower burden at equal value).
  Action action_at(double x) const {
    const double ql = detail::interp(grid, q_low, x);
    const double qh = detail::interp(grid, q_high, x);
    return qh > ql ? Action::High : Action::Low;
  }
};

enum class PolicyClass { AlwaysLow, AlwaysHigh, SingleThreshold, DoubleThreshold, Other };

constexpr const char* to_string(PolicyClass c) noexcept {
  switch (c) {
    case PolicyClass::AlwaysLow: return "always_low";
    case PolicyClass::AlwaysHigh: return "always_high";
    case PolicyClass::SingleThreshold: return "single_threshold";
    case PolicyClass::DoubleThreshold: return "double_threshold";
    default: return "other";
  }
}

struct PolicyStructure {
  PolicyClass classification = PolicyClass::AlwaysLow;
  std::vector<double> thresholds;  // states where the action switches
};

namespace detail {

// Per-node transition data reused across iterations: both targets b*x and
// b*x + c_a are fixed for fixed params, so their interpolation stencils are
// precomputed once.
struct BackupPlan {
  GridSpec grid;
  double alpha = 0.0;
  double gamma_low = 0.0, gamma_high = 0.0;
  std::vector<double> p_low, p_high;        // adherence probabilities per node
  std::vector<int> decay_i, low_i, high_i;  // left stencil index per node
  std::vector<double> decay_w, low_w, high_w;

  BackupPlan(const PatientParams& params, const GridSpec& g) : grid(GridSpec::checked(g)) {
    alpha = params.alpha;
    gamma_low = params.gamma_low;
    gamma_high = params.gamma_high;
    const int n = grid.n_points;
    p_low.resize(n);
    p_high.resize(n);
    decay_i.resize(n);
    low_i.resize(n);
    high_i.resize(n);
    decay_w.resize(n);
    low_w.resize(n);
    high_w.resize(n);
    for (int i = 0; i < n; ++i) {
      const double x = grid.node(i);
      p_low[i] = adherence_prob(x, Action::Low, params);
      p_high[i] = adherence_prob(x, Action::High, params);
      stencil(params.b * x, decay_i[i], decay_w[i]);
      stencil(params.b * x + params.c_low, low_i[i], low_w[i]);
      stencil(params.b * x + params.c_high, high_i[i], high_w[i]);
    }
  }

  void stencil(double x, int& idx, double& w) const {
    const int n = grid.n_points;
    if (x <= 0.0) {
      idx = 0;
      w = 0.0;
      return;
    }
    if (x >= grid.x_max) {
      idx = n - 2;
      w = 1.0;
      return;
    }
    const double pos = x / grid.spacing();
    idx = std::min(static_cast<int>(pos), n - 2);
    w = pos - idx;
  }

  double at(const std::vector<double>& v, int idx, double w) const {
    return v[idx] * (1.0 - w) + v[idx + 1] * w;
  }

  // One synchronous backup; optionally extracts Q tables and greedy actions.
  double apply(const std::vector<double>& v, std::vector<double>& out, PolicyTable* policy) const {
    const int n = grid.n_points;
    double residual = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v_decay = at(v, decay_i[i], decay_w[i]);
      const double ql =
          p_low[i] * (gamma_low + alpha * at(v, low_i[i], low_w[i])) +
          (1.0 - p_low[i]) * alpha * v_decay;
      const double qh =
          p_high[i] * (gamma_high + alpha * at(v, high_i[i], high_w[i])) +
          (1.0 - p_high[i]) * alpha * v_decay;
      const double best = std::max(ql, qh);
      residual = std::max(residual, std::abs(best - v[i]));
      out[i] = best;
      if (policy) {
        policy->q_low[i] = ql;
        policy->q_high[i] = qh;
        policy->actions[i] = qh > ql ? Action::High : Action::Low;
      }
    }
    return residual;
  }
};

inline void require_grid_match(const GridSpec& grid, const PatientParams& params) {
  const double x_bar = state_bound(params);
  if (std::abs(grid.x_max - x_bar) > 1e-9 * (1.0 + x_bar)) {
    throw std::invalid_argument("grid x_max " + std::to_string(grid.x_max) +
                                " does not match state bound " + std::to_string(x_bar));
  }
}

}  // namespace detail

// Single Bellman backup of v under the expanded Bernoulli expectation:
// Q(x,a) = p_a(x) (gamma_a + alpha v(bx + c_a)) + (1 - p_a(x)) alpha v(bx).
inline ValueFunction bellman_backup(const ValueFunction& v, const PatientParams& params) {
  detail::require_grid_match(v.grid, params);
  detail::BackupPlan plan(params, v.grid);
  ValueFunction out{v.grid, std::vector<double>(v.values.size())};
  plan.apply(v.values, out.values, nullptr);
  return out;
}

struct VIResult {
  ValueFunction value;
  PolicyTable policy;
  bool converged = false;
  int iterations = 0;
  std::vector<double> residuals;  // sup-norm change per iteration
};

// Iterates Bellman backups until the sup-norm change drops below tolerance.
// v_init defaults to the zero function; a warm start keeps the same contract
// (the fixed point does not depend on the initial iterate).
inline VIResult value_iteration(const PatientParams& params, const GridSpec& grid,
                                const std::vector<double>* v_init = nullptr) {
  const GridSpec g = GridSpec::checked(grid);
  detail::require_grid_match(g, params);
  detail::BackupPlan plan(params, g);
  const auto n = static_cast<std::size_t>(g.n_points);
  if (v_init && v_init->size() != n) {
    throw std::invalid_argument("warm-start value function has wrong size");
  }

  VIResult result;
  result.value.grid = g;
  result.policy.grid = g;
  result.policy.actions.resize(n);
  result.policy.q_low.resize(n);
  result.policy.q_high.resize(n);

  std::vector<double> v = v_init ? *v_init : std::vector<double>(n, 0.0);
  std::vector<double> next(n);
  for (int iter = 1; iter <= g.max_iterations; ++iter) {
    const double r = plan.apply(v, next, nullptr);
    v.swap(next);
    result.residuals.push_back(r);
    result.iterations = iter;
    if (r < g.tolerance) {
      result.converged = true;
      break;
    }
  }
  // Greedy policy with respect to the final iterate.
  plan.apply(v, next, &result.policy);
  result.value.values = std::move(v);
  return result;
}

// Scans node actions in state order and localizes each switch at the midpoint
// of the enclosing cell.
inline PolicyStructure classify_policy(const PolicyTable& policy) {
  if (policy.actions.empty()) throw std::invalid_argument("empty policy");
  PolicyStructure s;
  for (std::size_t i = 1; i < policy.actions.size(); ++i) {
    if (policy.actions[i] != policy.actions[i - 1]) {
      s.thresholds.push_back(0.5 * (policy.grid.node(static_cast<int>(i) - 1) +
                                    policy.grid.node(static_cast<int>(i))));
    }
  }
  switch (s.thresholds.size()) {
    case 0:
      s.classification = policy.actions.front() == Action::Low ? PolicyClass::AlwaysLow
                                                               : PolicyClass::AlwaysHigh;
      break;
    case 1: s.classification = PolicyClass::SingleThreshold; break;
    case 2: s.classification = PolicyClass::DoubleThreshold; break;
    default: s.classification = PolicyClass::Other; break;
  }
  return s;
}

struct HorizonValue {
  double value = 0.0;
  Action first_action = Action::Low;
};

inline constexpr int kOracleHorizonCap = 12;

namespace detail {

inline double horizon_q(const PatientParams& p, double x, Action a, int steps);

inline double horizon_value(const PatientParams& p, double x, int steps) {
  if (steps == 0) return 0.0;
  return std::max(horizon_q(p, x, Action::Low, steps), horizon_q(p, x, Action::High, steps));
}

inline double horizon_q(const PatientParams& p, double x, Action a, int steps) {
  const double prob = std::exp(-p.decay(a) * x);
  return prob * (p.treatment_reward(a) +
                 p.alpha * horizon_value(p, p.b * x + p.cost(a), steps - 1)) +
         (1.0 - prob) * p.alpha * horizon_value(p, p.b * x, steps - 1);
}

}  // namespace detail

// Exact optimal discounted reward over a short horizon by exhaustive recursion
// over actions and adherence outcomes, with exact (non-gridded) states. Cost
// grows as 4^horizon; independent check for the gridded solver.
inline HorizonValue finite_horizon_oracle(const PatientParams& p, double x_start, int horizon) {
  if (horizon < 1 || horizon > kOracleHorizonCap) {
    throw std::invalid_argument("oracle horizon must lie in [1, " +
                                std::to_string(kOracleHorizonCap) + "]");
  }
  const double ql = detail::horizon_q(p, x_start, Action::Low, horizon);
  const double qh = detail::horizon_q(p, x_start, Action::High, horizon);
  // Ties stay with Low.
  return qh > ql ? HorizonValue{qh, Action::High} : HorizonValue{ql, Action::Low};
}

}  // namespace burden
