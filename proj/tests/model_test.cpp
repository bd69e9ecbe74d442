#include "burden/model.hpp"

#include <cmath>
#include <gtest/gtest.h>

#include "burden/rng.hpp"
#include "test_support.hpp"

namespace burden {
namespace {

TEST(StateBound, DirectEvaluation) {
  EXPECT_DOUBLE_EQ(state_bound(1.0, 0.8), 5.0);
  EXPECT_DOUBLE_EQ(state_bound(1.0, 0.9), 10.0);
  EXPECT_DOUBLE_EQ(state_bound(1.0, 0.5), 2.0);
}

TEST(StateBound, RejectsDegenerateRecoveryRate) {
  EXPECT_THROW(state_bound(1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(state_bound(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(state_bound(1.0, -0.2), std::invalid_argument);
}

TEST(StepDynamics, Examples) {
  const PatientParams p = test::patient1();  // b = 0.8, c_high = 1
  EXPECT_DOUBLE_EQ(step_dynamics(0.5, Action::High, true, p), 1.4);
  EXPECT_DOUBLE_EQ(step_dynamics(1.0, Action::Low, false, p), 0.8);
  // x_bar is the fixed point of always-adhere-high dynamics.
  EXPECT_DOUBLE_EQ(step_dynamics(5.0, Action::High, true, p), 5.0);
}

TEST(StepDynamics, RejectsOutOfRangeState) {
  const PatientParams p = test::patient1();
  EXPECT_THROW(step_dynamics(-0.1, Action::Low, true, p), std::invalid_argument);
  EXPECT_THROW(step_dynamics(5.1, Action::Low, true, p), std::invalid_argument);
}

TEST(StepDynamics, StaysBounded) {
  const PatientParams p = test::patient1();
  const double x_bar = state_bound(p);
  Xoshiro256pp rng(7);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.next_double() * x_bar;
    const Action a = rng.next_double() < 0.5 ? Action::Low : Action::High;
    const bool d = rng.next_double() < 0.5;
    const double next = step_dynamics(x, a, d, p);
    EXPECT_GE(next, 0.0);
    EXPECT_LE(next, x_bar);
  }
}

TEST(StepDynamics, StrictDecayWithoutAdherence) {
  const PatientParams p = test::patient1();
  Xoshiro256pp rng(8);
  for (int i = 0; i < 100; ++i) {
    const double x = 1e-6 + rng.next_double() * (state_bound(p) - 1e-6);
    EXPECT_LT(step_dynamics(x, Action::High, false, p), x);
  }
}

TEST(AdherenceProb, Examples) {
  const PatientParams p1 = test::patient1();
  EXPECT_DOUBLE_EQ(adherence_prob(0.0, Action::Low, p1), 1.0);
  EXPECT_DOUBLE_EQ(adherence_prob(0.0, Action::High, p1), 1.0);
  EXPECT_NEAR(adherence_prob(1.0, Action::High, p1), 0.36788, 1e-5);  // lambda_high = 1

  PatientParams half = p1;
  half.lambda_low = 0.5;
  EXPECT_NEAR(adherence_prob(2.0, Action::Low, half), 0.36788, 1e-5);  // scale symmetry
}

TEST(AdherenceProb, RejectsNegativeState) {
  EXPECT_THROW(adherence_prob(-0.5, Action::Low, test::patient1()), std::invalid_argument);
}

TEST(AdherenceProb, MonotoneAndOrdered) {
  const PatientParams p = test::patient1();  // lambda_low < lambda_high
  Xoshiro256pp rng(9);
  double prev_x = 0.0;
  double prev_p = adherence_prob(0.0, Action::High, p);
  for (int i = 1; i <= 50; ++i) {
    const double x = i * 0.1;
    const double prob = adherence_prob(x, Action::High, p);
    EXPECT_LT(prob, prev_p);  // strictly decreasing in x
    prev_p = prob;
    prev_x = x;
    EXPECT_LT(prob, 1.0);  // equals 1 only at x = 0
    EXPECT_GE(adherence_prob(x, Action::Low, p), adherence_prob(x, Action::High, p));
  }
  (void)prev_x;
  // Decreasing in lambda at fixed x: low action has the smaller lambda.
  EXPECT_GT(adherence_prob(1.0, Action::Low, p), adherence_prob(1.0, Action::High, p));
}

TEST(Reward, Examples) {
  const PatientParams p = test::patient1();  // gamma = (0.5, 1)
  EXPECT_DOUBLE_EQ(reward(Action::High, true, p), 1.0);
  EXPECT_DOUBLE_EQ(reward(Action::Low, true, p), 0.5);
  EXPECT_DOUBLE_EQ(reward(Action::High, false, p), 0.0);
}

TEST(PatientParams, ValidationNamesViolatedInvariant) {
  PatientParams p = test::patient1();
  p.c_high = 0.9;
  EXPECT_THROW(PatientParams::checked(p), std::invalid_argument);

  p = test::patient1();
  p.c_low = 1.2;
  EXPECT_THROW(PatientParams::checked(p), std::invalid_argument);

  p = test::patient1();
  p.lambda_low = 2.0;  // exceeds lambda_high
  EXPECT_THROW(PatientParams::checked(p), std::invalid_argument);

  p = test::patient1();
  p.gamma_low = 2.0;  // exceeds gamma_high
  EXPECT_THROW(PatientParams::checked(p), std::invalid_argument);

  p = test::patient1();
  p.b = 1.0;
  EXPECT_THROW(PatientParams::checked(p), std::invalid_argument);

  p = test::patient1();
  p.alpha = 1.0;
  EXPECT_THROW(PatientParams::checked(p), std::invalid_argument);

  p = test::patient1();
  p.x0 = 5.5;  // outside [0, 5]
  EXPECT_THROW(PatientParams::checked(p), std::invalid_argument);

  EXPECT_NO_THROW(PatientParams::checked(test::patient2()));
}

}  // namespace
}  // namespace burden
