// Patient engagement model: parameter vector, state dynamics, adherence
// probability and treatment reward shared by every other component.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace burden {

// Absolute slack for comparisons against the state bound; dynamics iterate
// for hundreds of steps and accumulate rounding at the fixed point.
inline constexpr double kBoundTol = 1e-12;

enum class Action : std::uint8_t { Low = 0, High = 1 };

constexpr Action other(Action a) noexcept {
  return a == Action::Low ? Action::High : Action::Low;
}

constexpr const char* to_string(Action a) noexcept {
  return a == Action::Low ? "low" : "high";
}

inline double state_bound(double c_high, double b) {
  if (!(b > 0.0 && b < 1.0)) {
    throw std::invalid_argument("state bound undefined: b must lie in (0,1), got b=" +
                                std::to_string(b));
  }
  return c_high / (1.0 - b);
}

// Full per-patient parameterization: adherence costs (c_low, c_high), adherence
// decay (lambda_low, lambda_high), recovery rate b, initial state x0, treatment
// rewards (gamma_low, gamma_high) and discount alpha.
struct PatientParams {
  double c_low = 0.0;
  double c_high = 1.0;
  double lambda_low = 0.0;
  double lambda_high = 0.0;
  double b = 0.0;
  double x0 = 0.0;
  double gamma_low = 0.0;
  double gamma_high = 0.0;
  double alpha = 0.0;

  double cost(Action a) const noexcept { return a == Action::Low ? c_low : c_high; }
  double decay(Action a) const noexcept { return a == Action::Low ? lambda_low : lambda_high; }
  double treatment_reward(Action a) const noexcept {
    return a == Action::Low ? gamma_low : gamma_high;
  }

  // Validates every invariant once; all operations assume validated inputs.
  static PatientParams checked(PatientParams p) {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    auto finite = [&](double v, const char* name) {
      if (!std::isfinite(v)) fail(std::string(name) + " must be finite");
    };
    finite(p.c_low, "c_low");
    finite(p.lambda_low, "lambda_low");
    finite(p.lambda_high, "lambda_high");
    finite(p.b, "b");
    finite(p.x0, "x0");
    finite(p.gamma_low, "gamma_low");
    finite(p.gamma_high, "gamma_high");
    finite(p.alpha, "alpha");
    if (p.c_high != 1.0) fail("c_high must equal 1 (fixed for identifiability)");
    if (p.c_low < 0.0 || p.c_low > 1.0) fail("c_low must lie in [0,1]");
    if (p.c_low > p.c_high) fail("ordering violated: c_low <= c_high required");
    if (p.lambda_low <= 0.0) fail("lambda_low must be positive");
    if (p.lambda_high <= 0.0) fail("lambda_high must be positive");
    if (p.lambda_low > p.lambda_high) fail("ordering violated: lambda_low <= lambda_high required");
    if (p.gamma_low < 0.0) fail("gamma_low must be nonnegative");
    if (p.gamma_high < 0.0) fail("gamma_high must be nonnegative");
    if (p.gamma_low > p.gamma_high) fail("ordering violated: gamma_low <= gamma_high required");
    if (!(p.b > 0.0 && p.b < 1.0)) fail("b must lie in (0,1)");
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) fail("alpha must lie in (0,1)");
    const double x_bar = state_bound(p.c_high, p.b);
    if (p.x0 < -kBoundTol || p.x0 > x_bar + kBoundTol) {
      fail("x0 must lie in [0, x_bar] with x_bar=" + std::to_string(x_bar));
    }
    return p;
  }
};

inline double state_bound(const PatientParams& p) { return state_bound(p.c_high, p.b); }

// One day of engagement dynamics: x' = b*x + c_a*d, kept inside [0, x_bar].
inline double step_dynamics(double x, Action a, bool adhered, const PatientParams& p) {
  const double x_bar = state_bound(p);
  if (x < -kBoundTol || x > x_bar + kBoundTol) {
    throw std::invalid_argument("engagement state " + std::to_string(x) +
                                " outside [0, " + std::to_string(x_bar) + "]");
  }
  double next = p.b * x + (adhered ? p.cost(a) : 0.0);
  if (next < 0.0) next = 0.0;
  if (next > x_bar) next = x_bar;
  return next;
}

// P(adhere | x, a) = exp(-lambda_a * x); equals 1 only at x = 0.
inline double adherence_prob(double x, Action a, const PatientParams& p) {
  if (x < -kBoundTol) {
    throw std::invalid_argument("adherence_prob requires x >= 0, got x=" + std::to_string(x));
  }
  return std::exp(-p.decay(a) * (x < 0.0 ? 0.0 : x));
}

inline double reward(Action a, bool adhered, const PatientParams& p) noexcept {
  return adhered ? p.treatment_reward(a) : 0.0;
}

}  // namespace burden
