// Performance metrics against the true-parameter oracle policy.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "burden/trajectory.hpp"
#include "burden/value_iteration.hpp"

namespace burden {

inline constexpr int kMovingWindow = 28;

struct MetricsSeries {
  std::vector<std::uint8_t> optimal;  // daily indicator: action matched the oracle
  std::vector<double> cumulative_avg_reward;
  std::vector<double> cumulative_optimal_fraction;
  std::vector<double> moving_avg_optimal_fraction;  // trailing min(28, t+1) days
  std::vector<Action> oracle_actions;
};

// The oracle is evaluated at the simulator's true latent state; only this
// harness-side computation ever reads it.
inline MetricsSeries compute_metrics(const Trajectory& traj, const PolicyTable& oracle) {
  const double x_bar = state_bound(traj.params);
  if (std::abs(oracle.grid.x_max - x_bar) > 1e-9 * (1.0 + x_bar)) {
    throw std::invalid_argument("oracle policy grid does not match trajectory parameters");
  }
  const std::size_t n = traj.records.size();
  MetricsSeries m;
  m.optimal.resize(n);
  m.cumulative_avg_reward.resize(n);
  m.cumulative_optimal_fraction.resize(n);
  m.moving_avg_optimal_fraction.resize(n);
  m.oracle_actions.resize(n);

  double reward_sum = 0.0;
  int optimal_sum = 0;
  int window_sum = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const TrajectoryRecord& rec = traj.records[t];
    const Action best = oracle.action_at(rec.latent_state_before);
    m.oracle_actions[t] = best;
    const bool is_optimal = rec.action == best;
    m.optimal[t] = is_optimal ? 1 : 0;

    reward_sum += rec.reward;
    optimal_sum += is_optimal;
    window_sum += is_optimal;
    if (t >= kMovingWindow) window_sum -= m.optimal[t - kMovingWindow];

    const auto days = static_cast<double>(t + 1);
    m.cumulative_avg_reward[t] = reward_sum / days;
    m.cumulative_optimal_fraction[t] = optimal_sum / days;
    m.moving_avg_optimal_fraction[t] =
        window_sum / static_cast<double>(t + 1 < kMovingWindow ? t + 1 : kMovingWindow);
  }
  return m;
}

}  // namespace burden
