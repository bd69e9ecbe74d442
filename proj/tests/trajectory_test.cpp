#include "burden/trajectory.hpp"

#include <cmath>
#include <gtest/gtest.h>

#include "test_support.hpp"

namespace burden {
namespace {

struct AlwaysController final : Controller {
  Action fixed;
  explicit AlwaysController(Action a) : fixed(a) {}
  Action propose(int) override { return fixed; }
  void observe(Action, bool) override {}
  std::string name() const override { return "always"; }
};

struct ThrowingController final : Controller {
  Action propose(int day) override {
    if (day == 3) throw std::runtime_error("boom");
    return Action::Low;
  }
  void observe(Action, bool) override {}
  std::string name() const override { return "throwing"; }
};

// next_double() == 0 makes every Bernoulli(p > 0) draw succeed.
struct ZeroRng {
  double next_double() { return 0.0; }
};

TEST(SimulateStep, CertainAdherenceAtZeroState) {
  const PatientParams p = test::patient1();
  Xoshiro256pp rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto out = simulate_step(0.0, i % 2 ? Action::Low : Action::High, p, rng);
    EXPECT_TRUE(out.adhered);
  }
}

TEST(SimulateStep, EmpiricalAdherenceRateMatchesModel) {
  const PatientParams p = test::patient1();  // lambda_high = 1
  Xoshiro256pp rng(12345);
  const int n = 100000;
  int adhered = 0;
  for (int i = 0; i < n; ++i) adhered += simulate_step(1.0, Action::High, p, rng).adhered;
  EXPECT_NEAR(adhered / static_cast<double>(n), std::exp(-1.0), 0.01);
}

TEST(SimulateStep, DeterministicGivenSeed) {
  const PatientParams p = test::patient1();
  Xoshiro256pp r1(42), r2(42);
  for (int i = 0; i < 50; ++i) {
    const auto a = simulate_step(1.7, Action::Low, p, r1);
    const auto b = simulate_step(1.7, Action::Low, p, r2);
    EXPECT_EQ(a.adhered, b.adhered);
    EXPECT_DOUBLE_EQ(a.next_state, b.next_state);
    EXPECT_DOUBLE_EQ(a.reward, b.reward);
  }
}

TEST(RunTrajectory, SingleDay) {
  const PatientParams p = test::patient1();
  AlwaysController ctrl(Action::High);
  const Trajectory traj = run_trajectory(p, ctrl, 1, 99);
  ASSERT_EQ(traj.records.size(), 1u);
  EXPECT_EQ(traj.records[0].day, 0);
  EXPECT_DOUBLE_EQ(traj.records[0].latent_state_before, p.x0);
}

TEST(RunTrajectory, RejectsNonPositiveHorizon) {
  const PatientParams p = test::patient1();
  AlwaysController ctrl(Action::Low);
  EXPECT_THROW(run_trajectory(p, ctrl, 0, 1), std::invalid_argument);
}

TEST(RunTrajectory, LatentStatesChain) {
  const PatientParams p = test::patient1();
  RandomishController: {
  }
  AlwaysController ctrl(Action::Low);
  const Trajectory traj = run_trajectory(p, ctrl, 720, 5);
  ASSERT_EQ(traj.records.size(), 720u);
  for (std::size_t t = 0; t + 1 < traj.records.size(); ++t) {
    const auto& rec = traj.records[t];
    EXPECT_DOUBLE_EQ(traj.records[t + 1].latent_state_before,
                     step_dynamics(rec.latent_state_before, rec.action, rec.adhered, p));
    EXPECT_EQ(traj.records[t].day, static_cast<int>(t));
  }
}

TEST(RunTrajectory, Reproducible) {
  const PatientParams p = test::patient1();
  AlwaysController a(Action::High), b(Action::High);
  const Trajectory t1 = run_trajectory(p, a, 200, 77);
  const Trajectory t2 = run_trajectory(p, b, 200, 77);
  ASSERT_EQ(t1.records.size(), t2.records.size());
  for (std::size_t i = 0; i < t1.records.size(); ++i) {
    EXPECT_EQ(t1.records[i].adhered, t2.records[i].adhered);
    EXPECT_DOUBLE_EQ(t1.records[i].latent_state_before, t2.records[i].latent_state_before);
  }
}

TEST(RunTrajectory, ControllerFailureCarriesDay) {
  const PatientParams p = test::patient1();
  ThrowingController ctrl;
  try {
    run_trajectory(p, ctrl, 10, 1);
    FAIL() << "expected ControllerError";
  } catch (const ControllerError& e) {
    EXPECT_EQ(e.day(), 3);
  }
}

TEST(Dynamics, ForcedAdherenceConvergesToBound) {
  const PatientParams p = test::patient1();
  ZeroRng rng;
  double x = p.x0;
  double prev = x;
  for (int t = 0; t < 200; ++t) {
    const auto out = simulate_step(x, Action::High, p, rng);
    ASSERT_TRUE(out.adhered);
    x = out.next_state;
    EXPECT_GE(x, prev);  // monotone approach to the fixed point
    prev = x;
  }
  EXPECT_NEAR(x, state_bound(p), 1e-9);
}

}  // namespace
}  // namespace burden
