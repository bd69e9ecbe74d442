// Shared fixtures: the two synthetic patients, the policy-structure example
// model, the benchmark subproblem grid, and deterministic random sources.
#pragma once

#include <cstdint>
#include <vector>

#include "burden/estimator.hpp"
#include "burden/model.hpp"
#include "burden/rng.hpp"
#include "burden/trajectory.hpp"

namespace burden::test {

inline PatientParams patient1() {
  return PatientParams::checked({.c_low = 0.7,
                                 .c_high = 1.0,
                                 .lambda_low = 0.4,
                                 .lambda_high = 1.0,
                                 .b = 0.8,
                                 .x0 = 2.5,
                                 .gamma_low = 0.5,
                                 .gamma_high = 1.0,
                                 .alpha = 0.95});
}

inline PatientParams patient2() {
  return PatientParams::checked({.c_low = 0.1,
                                 .c_high = 1.0,
                                 .lambda_low = 0.2,
                                 .lambda_high = 1.0,
                                 .b = 0.8,
                                 .x0 = 2.5,
                                 .gamma_low = 0.4,
                                 .gamma_high = 1.0,
                                 .alpha = 0.95});
}

// The single-parameter sensitivity example: identical models except c_low.
inline PatientParams sensitivity_model(double c_low) {
  return PatientParams::checked({.c_low = c_low,
                                 .c_high = 1.0,
                                 .lambda_low = 0.7,
                                 .lambda_high = 0.8,
                                 .b = 0.9,
                                 .x0 = 0.0,
                                 .gamma_low = 0.5,
                                 .gamma_high = 1.0,
                                 .alpha = 0.95});
}

inline SubproblemGrid benchmark_grid() {
  return SubproblemGrid::build({0.2, 0.4, 0.6, 0.8, 1.0}, {0.6, 0.7, 0.8, 0.9});
}

// Feeds a fixed sequence of uniforms; repeats the last one when exhausted.
struct ScriptedRng {
  std::vector<double> values;
  std::size_t i = 0;
  double next_double() {
    if (values.empty()) return 0.5;
    const double v = values[i < values.size() ? i : values.size() - 1];
    ++i;
    return v;
  }
};

// Uniform-random actions against the true adherence model.
inline ObservationLog simulate_log(const PatientParams& p, int horizon, std::uint64_t seed) {
  Xoshiro256pp rng(seed);
  ObservationLog log;
  double x = p.x0;
  for (int t = 0; t < horizon; ++t) {
    const Action a = rng.next_double() < 0.5 ? Action::Low : Action::High;
    const StepOutcome out = simulate_step(x, a, p, rng);
    log.push(a, out.adhered);
    x = out.next_state;
  }
  return log;
}

}  // namespace burden::test
