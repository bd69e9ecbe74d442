// Synthetic patient simulator and the day-loop controller interface.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "burden/model.hpp"
#include "burden/rng.hpp"

namespace burden {

struct TrajectoryRecord {
  int day = 0;
  Action action = Action::Low;
  bool adhered = false;
  double latent_state_before = 0.0;  // simulator-private; controllers never read it
  double reward = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  std::uint64_t seed = 0;
  PatientParams params;
};

struct StepOutcome {
  bool adhered = false;
  double next_state = 0.0;
  double reward = 0.0;
};

// Draws d ~ Bernoulli(exp(-lambda_a x)) and advances the dynamics. Any source
// with next_double() -> [0,1) works, which lets tests force outcomes.
template <typename Rng>
StepOutcome simulate_step(double x, Action a, const PatientParams& p, Rng& rng) {
  const double prob = adherence_prob(x, a, p);
  const bool adhered = rng.next_double() < prob;
  return {adhered, step_dynamics(x, a, adhered, p), reward(a, adhered, p)};
}

// What a controller is willing to reveal about its decision for one day, for
// logging only. Weights point into controller-owned storage and are valid
// until the next propose().
struct ControllerSnapshot {
  std::optional<double> believed_state;
  std::optional<std::size_t> tuple_index;
  std::span<const double> posterior_weights;
  bool explored = false;
  bool estimation_failed = false;
};

// Pull-based day loop: propose(day) is called before the day's outcome exists;
// observe() reports (action, adherence) back. The latent state never crosses
// this interface.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual Action propose(int day) = 0;
  virtual void observe(Action action, bool adhered) = 0;
  virtual ControllerSnapshot snapshot() const { return {}; }
  virtual std::string name() const = 0;
};

class ControllerError : public std::runtime_error {
 public:
  ControllerError(int day, const std::string& what)
      : std::runtime_error("controller failed on day " + std::to_string(day) + ": " + what),
        day_(day) {}
  int day() const noexcept { return day_; }

 private:
  int day_;
};

// Runs `horizon` days of the interaction loop. Identical (params, controller,
// horizon, seed) yield a bit-identical trajectory.
template <typename DayObserver>
Trajectory run_trajectory(const PatientParams& params, Controller& controller, int horizon,
                          std::uint64_t seed, DayObserver&& on_day) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  Xoshiro256pp rng(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.params = params;
  traj.records.reserve(static_cast<std::size_t>(horizon));
  double x = params.x0;
  for (int day = 0; day < horizon; ++day) {
    Action a;
    try {
      a = controller.propose(day);
    } catch (const std::exception& e) {
      throw ControllerError(day, e.what());
    }
    const StepOutcome out = simulate_step(x, a, params, rng);
    try {
      controller.observe(a, out.adhered);
    } catch (const std::exception& e) {
      throw ControllerError(day, e.what());
    }
    traj.records.push_back({day, a, out.adhered, x, out.reward});
    on_day(traj.records.back(), controller);
    x = out.next_state;
  }
  return traj;
}

inline Trajectory run_trajectory(const PatientParams& params, Controller& controller, int horizon,
                                 std::uint64_t seed) {
  return run_trajectory(params, controller, horizon, seed,
                        [](const TrajectoryRecord&, const Controller&) {});
}

}  // namespace burden
