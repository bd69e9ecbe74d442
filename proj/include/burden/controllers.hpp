// Action-selection policies: the MLE-beta and Thompson-sampling adaptive
// controllers plus the Random/Reactive benchmarks and the true-parameter
// oracle. Adaptive controllers see only (action, adherence) pairs.
#pragma once

#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "burden/estimator.hpp"
#include "burden/model.hpp"
#include "burden/rng.hpp"
#include "burden/trajectory.hpp"
#include "burden/value_iteration.hpp"

namespace burden {

struct ViSettings {
  int n_points = 3000;
  double tolerance = 1e-3;
  int max_iterations = 10000;

  GridSpec to_grid(double x_max) const {
    return GridSpec::checked({n_points, x_max, tolerance, max_iterations});
  }
};

// Rewards and discount are fixed and known to every controller.
struct RewardSpec {
  double gamma_low = 0.0;
  double gamma_high = 0.0;
  double alpha = 0.0;
};

enum class ControllerKind { MleBeta, Thompson, Random, Reactive, Oracle };

constexpr const char* to_string(ControllerKind k) noexcept {
  switch (k) {
    case ControllerKind::MleBeta: return "mle_beta";
    case ControllerKind::Thompson: return "thompson";
    case ControllerKind::Random: return "random";
    case ControllerKind::Reactive: return "reactive";
    default: return "oracle";
  }
}

struct ControllerConfig {
  ControllerKind kind = ControllerKind::Random;
  double beta = 0.05;   // MleBeta: exploration decay rate
  int init_period = 10; // Thompson: alternation days, even so pairs complete
  SubproblemGrid subproblem_grid;
  ViSettings vi;
  RewardSpec rewards;
  int refit_every = 1;
  LogPrior prior;

  void validate() const {
    const bool adaptive = kind == ControllerKind::MleBeta || kind == ControllerKind::Thompson;
    if (kind == ControllerKind::MleBeta && !(beta > 0.0)) {
      throw std::invalid_argument("mle_beta requires beta > 0");
    }
    if (kind == ControllerKind::Thompson && (init_period < 2 || init_period % 2 != 0)) {
      throw std::invalid_argument("thompson init_period must be even and >= 2");
    }
    if (adaptive) {
      if (subproblem_grid.size() == 0) throw std::invalid_argument("empty subproblem grid");
      if (refit_every < 1) throw std::invalid_argument("refit_every must be >= 1");
      if (!(rewards.alpha > 0.0 && rewards.alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0,1)");
      }
      if (rewards.gamma_low < 0.0 || rewards.gamma_low > rewards.gamma_high) {
        throw std::invalid_argument("rewards must satisfy 0 <= gamma_low <= gamma_high");
      }
    }
  }
};

inline double exploration_probability(double beta, int n) { return std::exp(-beta * n); }

// First index whose cumulative weight exceeds u; zero-weight entries are
// never selected.
inline std::size_t sample_index(std::span<const double> weights, double u) {
  double cum = 0.0;
  std::size_t last_positive = 0;
  bool any = false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    any = true;
    last_positive = i;
    cum += weights[i];
    if (u < cum) return i;
  }
  if (!any) throw std::invalid_argument("cannot sample from all-zero weights");
  return last_positive;  // u at the rounding edge of the final bin
}

class RandomController final : public Controller {
 public:
  explicit RandomController(Xoshiro256pp rng) : rng_(rng) {}
  Action propose(int) override { return rng_.next_double() < 0.5 ? Action::Low : Action::High; }
  void observe(Action, bool) override {}
  std::string name() const override { return "random"; }

 private:
  Xoshiro256pp rng_;
};

// High after an adherence, Low after a non-adherence; first day defaults High.
class ReactiveController final : public Controller {
 public:
  Action propose(int) override { return last_adhered_ ? Action::High : Action::Low; }
  void observe(Action, bool adhered) override { last_adhered_ = adhered; }
  std::string name() const override { return "reactive"; }

 private:
  bool last_adhered_ = true;
};

inline PolicyTable oracle_policy(const PatientParams& true_params, const GridSpec& vi_grid) {
  return value_iteration(true_params, vi_grid).policy;
}

// Follows the optimal policy for the true parameters. Needs no access to the
// simulator: with x0 and theta known, observed (a, d) pairs determine the
// state exactly.
class OracleController final : public Controller {
 public:
  OracleController(const PatientParams& true_params, const ViSettings& vi)
      : params_(PatientParams::checked(true_params)),
        policy_(oracle_policy(params_, vi.to_grid(state_bound(params_)))),
        x_(params_.x0) {}

  Action propose(int) override { return policy_.action_at(x_); }
  void observe(Action a, bool adhered) override { x_ = step_dynamics(x_, a, adhered, params_); }
  ControllerSnapshot snapshot() const override { return {.believed_state = x_}; }
  std::string name() const override { return "oracle"; }

 private:
  PatientParams params_;
  PolicyTable policy_;
  double x_;
};

namespace detail {

// Estimation and policy machinery shared by the adaptive controllers: daily
// refits warm-started from the previous argmax, per-tuple warm-started value
// iteration, and a policy cache keyed by (tuple, fitted c_low).
class AdaptiveCore {
 public:
  explicit AdaptiveCore(const ControllerConfig& cfg) : cfg_(cfg) {}

  void record(Action a, bool adhered) { log_.push(a, adhered); }
  const ObservationLog& log() const noexcept { return log_; }
  bool fitted() const noexcept { return have_fit_; }

  void refit() {
    fitted_ = fit_all(cfg_.subproblem_grid, log_, cfg_.prior, have_fit_ ? &fitted_ : nullptr);
    weights_ = posterior_weights(fitted_).weights;
    have_fit_ = true;
  }

  const std::vector<SubproblemSolution>& solutions() const { return fitted_; }
  std::span<const double> weights() const { return weights_; }

  std::size_t argmax_index() const { return mle_estimate(fitted_).tuple_index; }

  double believed_for(std::size_t idx) const { return fitted_[idx].believed_state(log_); }

  std::shared_ptr<const PolicyTable> policy_for(std::size_t idx) {
    const SubproblemSolution& sol = fitted_[idx];
    const auto key = std::make_pair(idx, std::bit_cast<std::uint64_t>(sol.c_low_hat));
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;

    const GridSpec grid = cfg_.vi.to_grid(sol.tuple.x_bar());
    const PatientParams params =
        sol.to_params(cfg_.rewards.gamma_low, cfg_.rewards.gamma_high, cfg_.rewards.alpha);
    const auto warm = warm_v_.find(idx);
    VIResult vi = value_iteration(params, grid, warm != warm_v_.end() ? &warm->second : nullptr);
    if (!vi.converged) {
      throw std::runtime_error("value iteration failed to converge (residual " +
                               std::to_string(vi.residuals.back()) + ")");
    }
    warm_v_[idx] = std::move(vi.value.values);
    auto policy = std::make_shared<const PolicyTable>(std::move(vi.policy));
    if (cache_.size() > 256) cache_.clear();
    cache_.emplace(key, policy);
    return policy;
  }

 private:
  ControllerConfig cfg_;
  ObservationLog log_;
  std::vector<SubproblemSolution> fitted_;
  std::vector<double> weights_;
  bool have_fit_ = false;
  std::unordered_map<std::size_t, std::vector<double>> warm_v_;
  std::map<std::pair<std::size_t, std::uint64_t>, std::shared_ptr<const PolicyTable>> cache_;
};

}  // namespace detail

// Certainty-equivalence control with decaying exploration: alternate actions
// on the first two days, then follow the policy for the MLE parameters,
// flipping to the sub-optimal action with probability e^{-beta n}.
template <typename Rng = Xoshiro256pp>
class MleBetaController final : public Controller {
 public:
  MleBetaController(const ControllerConfig& cfg, Rng rng)
      : cfg_(cfg), rng_(std::move(rng)), core_(cfg) {
    cfg_.validate();
  }

  Action propose(int day) override {
    const int n = day + 1;
    explored_ = false;
    failed_today_ = false;
    if (n == 1) return Action::Low;
    if (n == 2) return Action::High;
    try {
      if (!core_.fitted() || (n - 3) % cfg_.refit_every == 0) {
        core_.refit();
        current_idx_ = core_.argmax_index();
        policy_ = core_.policy_for(current_idx_);
      }
      believed_ = core_.believed_for(current_idx_);
      const Action greedy = policy_->action_at(believed_);
      explored_ = rng_.next_double() <= exploration_probability(cfg_.beta, n);
      return explored_ ? other(greedy) : greedy;
    } catch (const EstimationError&) {
      failed_today_ = true;
      ++failures_;
      return rng_.next_double() < 0.5 ? Action::Low : Action::High;
    }
  }

  void observe(Action a, bool adhered) override { core_.record(a, adhered); }

  ControllerSnapshot snapshot() const override {
    ControllerSnapshot s;
    if (policy_) {
      s.believed_state = believed_;
      s.tuple_index = current_idx_;
    }
    s.posterior_weights = core_.weights();
    s.explored = explored_;
    s.estimation_failed = failed_today_;
    return s;
  }

  std::string name() const override { return "mle_beta"; }
  int estimation_failures() const noexcept { return failures_; }

 private:
  ControllerConfig cfg_;
  Rng rng_;
  detail::AdaptiveCore core_;
  std::shared_ptr<const PolicyTable> policy_;
  std::size_t current_idx_ = 0;
  double believed_ = 0.0;
  bool explored_ = false;
  bool failed_today_ = false;
  int failures_ = 0;
};

// Thompson sampling over the subproblem solutions: after an even alternation
// period, sample a tuple from the posterior weights each day and follow the
// optimal policy for that sampled model at its own reconstructed state.
template <typename Rng = Xoshiro256pp>
class ThompsonController final : public Controller {
 public:
  ThompsonController(const ControllerConfig& cfg, Rng rng)
      : cfg_(cfg), rng_(std::move(rng)), core_(cfg) {
    cfg_.validate();
  }

  Action propose(int day) override {
    const int n = day + 1;
    failed_today_ = false;
    if (n <= cfg_.init_period) return n % 2 == 1 ? Action::Low : Action::High;
    try {
      if (!core_.fitted() || (n - cfg_.init_period - 1) % cfg_.refit_every == 0) core_.refit();
      current_idx_ = sample_index(core_.weights(), rng_.next_double());
      policy_ = core_.policy_for(current_idx_);
      believed_ = core_.believed_for(current_idx_);
      return policy_->action_at(believed_);
    } catch (const EstimationError&) {
      failed_today_ = true;
      ++failures_;
      return rng_.next_double() < 0.5 ? Action::Low : Action::High;
    }
  }

  void observe(Action a, bool adhered) override { core_.record(a, adhered); }

  ControllerSnapshot snapshot() const override {
    ControllerSnapshot s;
    if (policy_) {
      s.believed_state = believed_;
      s.tuple_index = current_idx_;
    }
    s.posterior_weights = core_.weights();
    s.estimation_failed = failed_today_;
    return s;
  }

  std::string name() const override { return "thompson"; }
  int estimation_failures() const noexcept { return failures_; }

 private:
  ControllerConfig cfg_;
  Rng rng_;
  detail::AdaptiveCore core_;
  std::shared_ptr<const PolicyTable> policy_;
  std::size_t current_idx_ = 0;
  double believed_ = 0.0;
  bool failed_today_ = false;
  int failures_ = 0;
};

// `true_params` is consulted only for the oracle kind.
inline std::unique_ptr<Controller> make_controller(const ControllerConfig& cfg, Xoshiro256pp rng,
                                                   const PatientParams* true_params = nullptr) {
  cfg.validate();
  switch (cfg.kind) {
    case ControllerKind::MleBeta:
      return std::make_unique<MleBetaController<>>(cfg, rng);
    case ControllerKind::Thompson:
      return std::make_unique<ThompsonController<>>(cfg, rng);
    case ControllerKind::Random:
      return std::make_unique<RandomController>(rng);
    case ControllerKind::Reactive:
      return std::make_unique<ReactiveController>();
    case ControllerKind::Oracle:
      if (!true_params) throw std::invalid_argument("oracle controller needs true parameters");
      return std::make_unique<OracleController>(*true_params, cfg.vi);
  }
  throw std::invalid_argument("unknown controller kind");
}

}  // namespace burden
