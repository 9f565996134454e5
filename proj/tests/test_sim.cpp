#include <gtest/gtest.h>

#include "support.hpp"

namespace coordlqr {
namespace {

using testing::max_abs;
using testing::scalar;

const ConstraintPolicy kExamplePolicy = ConstraintPolicy::constant(scalar(-1.5));

// 55 P + xbar0^2 Pbar / 0.39 with xbar0 = 4
double example_closed_form_cost() {
  return 55.0 * testing::scalar_are_P() + 16.0 * testing::scalar_are_Pbar() / 0.39;
}

TEST(AverageFeedbackGains, FiveSubsystemCoefficients) {
  const auto ens = testing::five_subsystems();
  const auto steady = solve_steady(ens, scalar(-1.5));
  const auto g = average_feedback_gains(ens, steady.Kbar);
  const double expected[] = {0.0908, 0.0605, 0.0908, 0.0303, 0.1210};
  ASSERT_EQ(g.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(g[i](0, 0), expected[i], 5e-4);
}

TEST(Simulate, ZeroStartStaysAtZero) {
  const auto ens = testing::five_subsystems();
  const auto steady = solve_steady(ens, scalar(-1.5));
  const InitialCondition zero(5, Vector::Zero(1));
  const auto traj = simulate(ens, steady, kExamplePolicy, zero, 20);
  EXPECT_EQ(accumulated_cost(traj), 0.0);
  EXPECT_EQ(final_max_state_norm(traj), 0.0);
}

TEST(Simulate, ExampleConvergesWithinFortySteps) {
  const auto ens = testing::five_subsystems();
  const auto steady = solve_steady(ens, scalar(-1.5));
  const auto traj = simulate(ens, steady, kExamplePolicy, testing::five_subsystems_ic(), 40);
  ASSERT_EQ(traj.states.size(), 41u);
  ASSERT_EQ(traj.controls.size(), 40u);
  EXPECT_LT(final_max_state_norm(traj), 1e-6);
}

TEST(Simulate, AccumulatedCostApproachesClosedForm) {
  const auto ens = testing::five_subsystems();
  const auto steady = solve_steady(ens, scalar(-1.5));
  const auto traj = simulate(ens, steady, kExamplePolicy, testing::five_subsystems_ic(), 200);
  const double expected = example_closed_form_cost();
  EXPECT_NEAR(accumulated_cost(traj), expected, 1e-6 * expected);
}

TEST(Simulate, SingleStepCostByHand) {
  // N = 0: K = 0, Kbar = -1.5, so u_i = -6 mu_i / 0.39 and the control energy
  // is 36 / 0.39.
  const auto ens = testing::five_subsystems();
  const auto sched = synthesize_finite(ens, kExamplePolicy, 0);
  const auto traj = simulate(ens, sched, kExamplePolicy, testing::five_subsystems_ic(), 1);
  const double expected = 55.0 + 36.0 / 0.39;
  EXPECT_NEAR(accumulated_cost(traj), expected, 1e-12 * expected);
  EXPECT_NEAR(optimal_cost(sched, testing::five_subsystems_ic(), ens), expected,
              1e-12 * expected);
}

TEST(Simulate, FiniteScheduleCostMatchesValueMatrices) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = random_instance(rng);
    const auto sched = synthesize_finite(inst.ens, inst.policy, inst.horizon);
    const auto traj = simulate(inst.ens, sched, inst.policy, inst.ic, inst.horizon + 1);
    const double closed = optimal_cost(sched, inst.ic, inst.ens);
    EXPECT_NEAR(accumulated_cost(traj), closed, 1e-9 * (1.0 + closed));
  }
}

TEST(Simulate, ConstraintHoldsExactly) {
  const auto ens = testing::five_subsystems();
  const auto steady = solve_steady(ens, scalar(-1.5));
  const auto traj = simulate(ens, steady, kExamplePolicy, testing::five_subsystems_ic(), 40);
  EXPECT_LT(constraint_check(traj, kExamplePolicy), 1e-12);

  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = random_instance(rng);
    const auto sched = synthesize_finite(inst.ens, inst.policy, inst.horizon);
    const auto t = simulate(inst.ens, sched, inst.policy, inst.ic, inst.horizon + 1);
    EXPECT_LE(constraint_check(t, inst.policy), 1e-9);
    for (double r : t.constraint_residuals) EXPECT_LE(r, 1e-9);
  }
}

TEST(Simulate, ConstraintCheckDetectsViolation) {
  const auto ens = testing::five_subsystems();
  const std::vector<std::vector<Vector>> none(3, std::vector<Vector>(5, Vector::Zero(1)));
  const auto traj =
      simulate_open_loop(ens, kExamplePolicy, testing::five_subsystems_ic(), none);
  // ubar = 0 against Fbar xbar0 = -6
  EXPECT_NEAR(constraint_check(traj, kExamplePolicy), 2.0 * 2.0 * 6.0, 1e-12);
  EXPECT_NEAR(traj.constraint_residuals[0], 6.0, 1e-12);
}

TEST(Simulate, AverageFollowsClosedLoopAverageDynamics) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_instance(rng);
    const auto sched = synthesize_finite(inst.ens, inst.policy, inst.horizon);
    const auto t = simulate(inst.ens, sched, inst.policy, inst.ic, inst.horizon + 1);
    for (int k = 0; k < t.steps; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const Matrix closed = inst.ens.A() + inst.ens.B() * inst.policy.gain(k);
      const Vector expected = closed * t.avg_state[ku];
      EXPECT_LT(max_abs(t.avg_state[ku + 1] - expected),
                1e-10 * (1.0 + max_abs(expected)));
    }
  }
}

TEST(Simulate, ExampleAverageHalvesEachStep) {
  const auto ens = testing::five_subsystems();
  const auto steady = solve_steady(ens, scalar(-1.5));
  const auto traj = simulate(ens, steady, kExamplePolicy, testing::five_subsystems_ic(), 30);
  for (int k = 0; k <= 30; ++k) {
    EXPECT_NEAR(traj.avg_state[static_cast<std::size_t>(k)](0), 4.0 * std::pow(0.5, k),
                1e-12);
  }
}

TEST(Simulate, OverflowIsNotDecay) {
  const auto ens = testing::five_subsystems();
  SteadySolution law;
  law.K = scalar(0.0);
  law.Kbar = scalar(0.0);
  const auto policy = ConstraintPolicy::constant(scalar(0.0));
  const auto traj = simulate(ens, law, policy, testing::five_subsystems_ic(), 1100);
  EXPECT_TRUE(std::isinf(final_max_state_norm(traj)));
}

TEST(Simulate, ScheduleCannotRunPastItsHorizon) {
  const auto ens = testing::five_subsystems();
  const auto sched = synthesize_finite(ens, kExamplePolicy, 5);
  EXPECT_NO_THROW(simulate(ens, sched, kExamplePolicy, testing::five_subsystems_ic(), 6));
  try {
    simulate(ens, sched, kExamplePolicy, testing::five_subsystems_ic(), 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::HorizonExceeded);
  }
}

}  // namespace
}  // namespace coordlqr
