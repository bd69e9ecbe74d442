// Maximum likelihood / MAP estimation of patient parameters from observed
// (action, adherence) sequences. The non-concave joint problem is split into
// one concave subproblem per (lambda_low, lambda_high, b) tuple; each
// subproblem profiles out (c_low, x0) over a box with c_high fixed at 1.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "burden/model.hpp"

namespace burden {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ObservationLog {
  std::vector<Action> actions;
  std::vector<std::uint8_t> decisions;

  std::size_t size() const noexcept { return actions.size(); }
  bool empty() const noexcept { return actions.empty(); }

  void push(Action a, bool adhered) {
    actions.push_back(a);
    decisions.push_back(adhered ? 1 : 0);
  }

  ObservationLog prefix(std::size_t n) const {
    if (n > size()) throw std::invalid_argument("prefix longer than log");
    return {std::vector<Action>(actions.begin(), actions.begin() + n),
            std::vector<std::uint8_t>(decisions.begin(), decisions.begin() + n)};
  }
};

// Partition of {0..n} by (action, decision) outcome.
struct IndexSets {
  std::vector<int> low_skip;     // a = low,  d = 0
  std::vector<int> low_adhere;   // a = low,  d = 1
  std::vector<int> high_skip;    // a = high, d = 0
  std::vector<int> high_adhere;  // a = high, d = 1
};

inline IndexSets build_index_sets(const ObservationLog& log) {
  if (log.empty()) throw std::invalid_argument("cannot build index sets from empty log");
  IndexSets s;
  for (std::size_t t = 0; t < log.size(); ++t) {
    const bool low = log.actions[t] == Action::Low;
    const bool adhered = log.decisions[t] != 0;
    auto& bucket = low ? (adhered ? s.low_adhere : s.low_skip)
                       : (adhered ? s.high_adhere : s.high_skip);
    bucket.push_back(static_cast<int>(t));
  }
  return s;
}

struct ParamTuple {
  double lambda_low = 0.0;
  double lambda_high = 0.0;
  double b = 0.0;

  double lambda(Action a) const noexcept { return a == Action::Low ? lambda_low : lambda_high; }
  double x_bar() const { return state_bound(1.0, b); }

  bool operator==(const ParamTuple&) const = default;
};

// All (lambda_low, lambda_high, b) combinations with lambda_low <= lambda_high,
// enumerated pair-major then b, which fixes tie-breaking order.
struct SubproblemGrid {
  std::vector<double> lambda_set;
  std::vector<double> b_set;
  std::vector<ParamTuple> tuples;

  std::size_t size() const noexcept { return tuples.size(); }

  static SubproblemGrid build(std::vector<double> lambda_set, std::vector<double> b_set) {
    auto ascending = [](const std::vector<double>& v) {
      for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) return false;
      }
      return !v.empty();
    };
    if (!ascending(lambda_set) || lambda_set.front() <= 0.0) {
      throw std::invalid_argument("lambda_set must be strictly ascending and positive");
    }
    if (!ascending(b_set) || b_set.front() <= 0.0 || b_set.back() >= 1.0) {
      throw std::invalid_argument("b_set must be strictly ascending inside (0,1)");
    }
    SubproblemGrid g;
    g.lambda_set = std::move(lambda_set);
    g.b_set = std::move(b_set);
    for (std::size_t i = 0; i < g.lambda_set.size(); ++i) {
      for (std::size_t j = i; j < g.lambda_set.size(); ++j) {
        for (double b : g.b_set) {
          g.tuples.push_back({g.lambda_set[i], g.lambda_set[j], b});
        }
      }
    }
    return g;
  }

  std::optional<std::size_t> find(double lambda_low, double lambda_high, double b,
                                  double tol = 1e-12) const {
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      if (std::abs(tuples[i].lambda_low - lambda_low) <= tol &&
          std::abs(tuples[i].lambda_high - lambda_high) <= tol &&
          std::abs(tuples[i].b - b) <= tol) {
        return i;
      }
    }
    return std::nullopt;
  }
};

// Log-prior over (c_low, c_high, x0) given a tuple. Must be jointly concave in
// its arguments and finite on the feasible box. A null density is the uniform
// prior, under which MAP coincides with the MLE.
struct LogPrior {
  std::function<double(double c_low, double c_high, double x0, const ParamTuple&)> log_density;
  // Optional (d/dc_low, d/dx0); central differences are used when absent.
  std::function<std::array<double, 2>(double c_low, double c_high, double x0, const ParamTuple&)>
      gradient;

  bool uniform() const noexcept { return !log_density; }

  double value(double c_low, double c_high, double x0, const ParamTuple& tuple) const {
    return log_density ? log_density(c_low, c_high, x0, tuple) : 0.0;
  }

  std::array<double, 2> grad(double c_low, double c_high, double x0,
                             const ParamTuple& tuple) const {
    if (!log_density) return {0.0, 0.0};
    if (gradient) return gradient(c_low, c_high, x0, tuple);
    const double h = 1e-7;
    return {(log_density(c_low + h, c_high, x0, tuple) -
             log_density(c_low - h, c_high, x0, tuple)) /
                (2 * h),
            (log_density(c_low, c_high, x0 + h, tuple) -
             log_density(c_low, c_high, x0 - h, tuple)) /
                (2 * h)};
  }
};

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// log(1 - e^{-z}) for z > 0 without cancellation on either side of ln 2.
inline double log1mexp(double z) {
  return z > 0.6931471805599453 ? std::log1p(-std::exp(-z)) : std::log(-std::expm1(-z));
}

// e^{-z} / (1 - e^{-z}) = 1 / (e^z - 1).
inline double inv_expm1(double z) { return 1.0 / std::expm1(z); }

// The state trajectory induced by (x0, c_low) under a fixed tuple is affine:
// x_t = px[t] x0 + sc[t] c_low + hc[t]. Coefficients follow the recursion of
// the dynamics, so closed form and step-by-step iteration agree exactly.
struct AffineStates {
  std::vector<double> px, sc, hc;

  AffineStates(const ParamTuple& tuple, const ObservationLog& log) {
    const std::size_t n = log.size();
    px.resize(n + 1);
    sc.resize(n + 1);
    hc.resize(n + 1);
    px[0] = 1.0;
    sc[0] = 0.0;
    hc[0] = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const bool adhered = log.decisions[t] != 0;
      px[t + 1] = tuple.b * px[t];
      sc[t + 1] = tuple.b * sc[t] + ((adhered && log.actions[t] == Action::Low) ? 1.0 : 0.0);
      hc[t + 1] = tuple.b * hc[t] + ((adhered && log.actions[t] == Action::High) ? 1.0 : 0.0);
    }
  }

  double state(std::size_t t, double c_low, double x0) const {
    return px[t] * x0 + sc[t] * c_low + hc[t];
  }
};

// Likelihood evaluation machinery for one (tuple, log) pair. The adherence
// terms are affine in (c_low, x0) and collapse into three scalars; only the
// non-adherence terms need a loop.
struct SubproblemObjective {
  ParamTuple tuple;
  AffineStates states;
  double a_x0 = 0.0, a_c = 0.0, a_const = 0.0;  // sum over d=1 of lambda_t * coeff
  struct ZeroTerm {
    double lambda, px, sc, hc;
  };
  std::vector<ZeroTerm> zeros;  // d=0 terms

  SubproblemObjective(const ParamTuple& tp, const ObservationLog& log)
      : tuple(tp), states(tp, log) {
    for (std::size_t t = 0; t < log.size(); ++t) {
      const double lam = tuple.lambda(log.actions[t]);
      if (log.decisions[t] != 0) {
        a_x0 += lam * states.px[t];
        a_c += lam * states.sc[t];
        a_const += lam * states.hc[t];
      } else {
        zeros.push_back({lam, states.px[t], states.sc[t], states.hc[t]});
      }
    }
  }

  // Log-likelihood only (no prior). -inf when a non-adherence lands on a
  // (numerically) zero state, a probability-zero event under the model.
  double value(double c_low, double x0) const {
    double v = -(a_x0 * x0 + a_c * c_low + a_const);
    for (const ZeroTerm& z : zeros) {
      const double x = z.px * x0 + z.sc * c_low + z.hc;
      if (x < 1e-12) return kNegInf;
      v += log1mexp(z.lambda * x);
    }
    return v;
  }

  // d/dx0 and d/dc_low; false when the objective is -inf at the point.
  bool gradient(double c_low, double x0, double& dx0, double& dc_low) const {
    dx0 = -a_x0;
    dc_low = -a_c;
    for (const ZeroTerm& z : zeros) {
      const double x = z.px * x0 + z.sc * c_low + z.hc;
      if (x < 1e-12) return false;
      const double w = z.lambda * inv_expm1(z.lambda * x);
      dx0 += w * z.px;
      dc_low += w * z.sc;
    }
    return true;
  }
};

}  // namespace detail

// States x_0..x_n induced by (x0, c_low) under the tuple, one past the last
// observation; the final entry is the state the next decision applies to.
inline std::vector<double> induced_trajectory(double x0, double c_low, const ParamTuple& tuple,
                                              const ObservationLog& log) {
  detail::AffineStates coeffs(tuple, log);
  std::vector<double> xs(log.size() + 1);
  for (std::size_t t = 0; t < xs.size(); ++t) xs[t] = coeffs.state(t, c_low, x0);
  return xs;
}

inline double log_likelihood(double x0, double c_low, const ParamTuple& tuple,
                             const ObservationLog& log) {
  return detail::SubproblemObjective(tuple, log).value(c_low, x0);
}

struct LikelihoodGradient {
  double dx0 = 0.0;
  double dc_low = 0.0;
};

inline LikelihoodGradient log_likelihood_gradient(double x0, double c_low,
                                                  const ParamTuple& tuple,
                                                  const ObservationLog& log) {
  LikelihoodGradient g;
  if (!detail::SubproblemObjective(tuple, log).gradient(c_low, x0, g.dx0, g.dc_low)) {
    throw std::domain_error("log-likelihood gradient undefined where objective is -inf");
  }
  return g;
}

enum class FitStatus : std::uint8_t {
  Ok = 0,
  BoundaryDegenerate,  // argmax on the box boundary with the gradient pushing outward
  InfeasibleData,      // objective -inf everywhere reachable
};

struct SubproblemSolution {
  ParamTuple tuple;
  std::size_t tuple_index = 0;
  double c_low_hat = 0.0;
  double c_high_hat = 1.0;
  double x0_hat = 0.0;
  double psi = kNegInf;  // log-likelihood plus log-prior at the argmax
  std::vector<double> induced_states;
  FitStatus status = FitStatus::Ok;
  double certificate_spread = 0.0;  // max - min objective across multistart runs
  int iterations = 0;

  std::size_t fitted_length() const noexcept {
    return induced_states.empty() ? 0 : induced_states.size() - 1;
  }

  // Rolls the reconstruction forward through observations made after the fit;
  // with a fit on the full log this is just the trailing induced state.
  double believed_state(const ObservationLog& log) const {
    double x = induced_states.back();
    for (std::size_t t = fitted_length(); t < log.size(); ++t) {
      const double cost = log.actions[t] == Action::Low ? c_low_hat : c_high_hat;
      x = tuple.b * x + (log.decisions[t] != 0 ? cost : 0.0);
    }
    return x;
  }

  // Combines the fitted components with the known rewards and discount.
  PatientParams to_params(double gamma_low, double gamma_high, double alpha) const {
    return PatientParams::checked({.c_low = c_low_hat,
                                   .c_high = c_high_hat,
                                   .lambda_low = tuple.lambda_low,
                                   .lambda_high = tuple.lambda_high,
                                   .b = tuple.b,
                                   .x0 = x0_hat,
                                   .gamma_low = gamma_low,
                                   .gamma_high = gamma_high,
                                   .alpha = alpha});
  }
};

struct SolveOptions {
  const SubproblemSolution* warm = nullptr;  // previous argmax for this tuple
  int max_iterations = 500;
  double pg_tolerance = 1e-8;  // projected-gradient norm target
};

namespace detail {

struct PgaRun {
  double c = 0.0, x0 = 0.0, value = kNegInf;
  int iterations = 0;
};

// Projected gradient ascent with Armijo backtracking over the box
// [0,1] x [0, x_bar]: initial step 1, shrink 0.5, slope 1e-4.
inline PgaRun projected_gradient_ascent(const SubproblemObjective& obj, const LogPrior& prior,
                                        double x_bar, double c, double x0,
                                        const SolveOptions& opts) {
  auto clamp = [](double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); };
  auto eval = [&](double cc, double xx) {
    const double lik = obj.value(cc, xx);
    return lik == kNegInf ? kNegInf : lik + prior.value(cc, 1.0, xx, obj.tuple);
  };

  PgaRun run;
  run.c = clamp(c, 0.0, 1.0);
  run.x0 = clamp(x0, 0.0, x_bar);
  run.value = eval(run.c, run.x0);
  if (run.value == kNegInf) return run;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    double gx0, gc;
    if (!obj.gradient(run.c, run.x0, gx0, gc)) break;
    const auto pg = prior.grad(run.c, 1.0, run.x0, obj.tuple);
    gc += pg[0];
    gx0 += pg[1];

    const double proj_c = clamp(run.c + gc, 0.0, 1.0) - run.c;
    const double proj_x0 = clamp(run.x0 + gx0, 0.0, x_bar) - run.x0;
    if (std::hypot(proj_c, proj_x0) < opts.pg_tolerance) break;

    double step = 1.0;
    bool accepted = false;
    while (step >= 1e-16) {
      const double cn = clamp(run.c + step * gc, 0.0, 1.0);
      const double xn = clamp(run.x0 + step * gx0, 0.0, x_bar);
      const double vn = eval(cn, xn);
      if (vn > kNegInf && vn >= run.value + 1e-4 * (gc * (cn - run.c) + gx0 * (xn - run.x0))) {
        run.c = cn;
        run.x0 = xn;
        run.value = vn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++run.iterations;
    if (!accepted) break;
  }
  return run;
}

}  // namespace detail

// Maximizes log-likelihood + log-prior over (c_low, x0) for one fixed tuple.
// Without a warm start the solver runs from the four box corners plus the
// center; concavity makes all finite starts agree, which doubles as a
// convexity-of-formulation check (certificate_spread).
inline SubproblemSolution solve_subproblem(const ParamTuple& tuple, const ObservationLog& log,
                                           const LogPrior& prior = {},
                                           const SolveOptions& opts = {}) {
  if (log.empty()) throw std::invalid_argument("cannot fit an empty observation log");
  const double x_bar = tuple.x_bar();
  detail::SubproblemObjective obj(tuple, log);

  std::vector<std::array<double, 2>> starts;  // (c, x0)
  if (opts.warm) {
    starts.push_back({opts.warm->c_low_hat, opts.warm->x0_hat});
  } else {
    starts = {{0.0, 0.0}, {0.0, x_bar}, {1.0, 0.0}, {1.0, x_bar}, {0.5, 0.5 * x_bar}};
  }

  SubproblemSolution sol;
  sol.tuple = tuple;
  double best = kNegInf, worst = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& s : starts) {
    double c = s[0], x0 = s[1];
    // Corners can sit on the -inf wall (x0 = 0 before the first adherence);
    // nudge toward the center until the objective is finite.
    for (int tries = 0; tries < 4 && obj.value(c, x0) == kNegInf; ++tries) {
      c += (0.5 - c) * 1e-3;
      x0 += (0.5 * x_bar - x0) * 1e-3;
    }
    const detail::PgaRun run = detail::projected_gradient_ascent(obj, prior, x_bar, c, x0, opts);
    sol.iterations += run.iterations;
    if (run.value == kNegInf) continue;
    any = true;
    worst = std::min(worst, run.value);
    if (run.value > best) {
      best = run.value;
      sol.c_low_hat = run.c;
      sol.x0_hat = run.x0;
    }
  }

  if (!any) {
    sol.status = FitStatus::InfeasibleData;
    sol.psi = kNegInf;
    return sol;
  }
  sol.psi = best;
  sol.certificate_spread = starts.size() > 1 ? best - worst : 0.0;
  sol.induced_states = induced_trajectory(sol.x0_hat, sol.c_low_hat, tuple, log);

  // Boundary diagnostics: an active bound with the gradient pointing outward
  // means the likelihood wants to leave the feasible box.
  double gx0, gc;
  if (obj.gradient(sol.c_low_hat, sol.x0_hat, gx0, gc)) {
    const auto pg = prior.grad(sol.c_low_hat, 1.0, sol.x0_hat, tuple);
    gc += pg[0];
    gx0 += pg[1];
    const double eps = 1e-12, push = 1e-10;
    const bool outward = (sol.c_low_hat <= eps && gc < -push) ||
                         (sol.c_low_hat >= 1.0 - eps && gc > push) ||
                         (sol.x0_hat <= eps && gx0 < -push) ||
                         (sol.x0_hat >= x_bar - eps && gx0 > push);
    if (outward) sol.status = FitStatus::BoundaryDegenerate;
  }
  return sol;
}

// Solves every tuple in grid order. `warm`, when given, must be the previous
// fit_all result for the same grid.
inline std::vector<SubproblemSolution> fit_all(const SubproblemGrid& grid,
                                               const ObservationLog& log,
                                               const LogPrior& prior = {},
                                               const std::vector<SubproblemSolution>* warm
                                               = nullptr) {
  if (grid.size() == 0) throw std::invalid_argument("empty subproblem grid");
  if (warm && warm->size() != grid.size()) {
    throw std::invalid_argument("warm-start solutions do not match grid size");
  }
  std::vector<SubproblemSolution> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SolveOptions opts;
    if (warm && (*warm)[i].psi > kNegInf) opts.warm = &(*warm)[i];
    SubproblemSolution sol = solve_subproblem(grid.tuples[i], log, prior, opts);
    sol.tuple_index = i;
    out.push_back(std::move(sol));
  }
  return out;
}

// Argmax-psi solution; ties break to the smallest tuple index.
inline const SubproblemSolution& mle_estimate(const std::vector<SubproblemSolution>& solutions) {
  const SubproblemSolution* best = nullptr;
  for (const auto& s : solutions) {
    if (s.psi == kNegInf) continue;
    if (!best || s.psi > best->psi) best = &s;
  }
  if (!best) throw EstimationError("every subproblem was infeasible on this log");
  return *best;
}

struct PosteriorWeights {
  std::vector<double> weights;
};

// Normalized exponentiated objectives over the subproblem solutions,
// log-sum-exp stabilized; infeasible entries get weight zero.
inline PosteriorWeights posterior_weights(const std::vector<SubproblemSolution>& solutions) {
  if (solutions.empty()) throw std::invalid_argument("no solutions to weight");
  double psi_max = kNegInf;
  for (const auto& s : solutions) psi_max = std::max(psi_max, s.psi);
  if (psi_max == kNegInf) throw EstimationError("every subproblem was infeasible on this log");
  PosteriorWeights w;
  w.weights.resize(solutions.size());
  double total = 0.0;
  for (std::size_t i = 0; i < solutions.size(); ++i) {
    const double e = solutions[i].psi == kNegInf ? 0.0 : std::exp(solutions[i].psi - psi_max);
    w.weights[i] = e;
    total += e;
  }
  for (double& v : w.weights) v /= total;
  return w;
}

}  // namespace burden
