#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "coordlqr/riccati.hpp"
#include "coordlqr/sim.hpp"

namespace coordlqr {

/// Minimizer of the finite-horizon constrained problem found by a direct KKT
/// solve. `controls` is stacked step-major: u_k^i occupies
/// [((k * v) + i) * m, +m). `multipliers` holds one m-block per step for the
/// average constraint, scaled to match the costate p_k^{v+1}.
struct OracleSolution {
  Vector controls;
  double cost = 0.0;
  double kkt_residual = 0.0;
  Vector multipliers;
  int horizon = 0;
  int count = 0;
  int inputs = 0;

  /// controls reshaped to [k][i].
  std::vector<std::vector<Vector>> by_step() const;
};

struct OracleOptions {
  bool constrained = true;     // false drops the average constraint rows
  int max_unknowns = 3000;
};

/// Eliminates the states, assembles the quadratic objective and the
/// (N+1) m equality rows ubar_k - Fbar_k xbar_k = 0, and solves the saddle-point
/// system. Throws ProblemTooLarge or SingularKKT.
OracleSolution centralized_oracle(const Ensemble& ens, const ConstraintPolicy& policy,
                                  int horizon, const InitialCondition& ic,
                                  const OracleOptions& opts = {},
                                  const Tolerances& tol = {});

/// Costates reconstructed from the closed-form value matrices:
///   p_k^i     = P_{k+1} x_{k+1}^i + (mu_i/sum mu^2) Pbar_{k+1} xbar_{k+1}
///   p_k^{v+1} = -(1/sum mu^2) [(R + B'(P_{k+1}+Pbar_{k+1})B) Fbar_k
///                              + B'(P_{k+1}+Pbar_{k+1})A] xbar_k
struct CostateTrace {
  std::vector<std::vector<Vector>> p;  // [k][i], k = 0..N
  std::vector<Vector> p_extra;         // [k]
};

/// Requires a trajectory of exactly N + 1 steps.
CostateTrace costates_closed_form(const Trajectory& traj, const GainSchedule& schedule,
                                  const Ensemble& ens);

struct MpResiduals {
  double equilibrium_max = 0.0;  // |R u + B'p + mu_i p^{v+1}|
  double adjoint_max = 0.0;      // |p_{k-1} - Q x_k - A'p_k + mu_i Fbar_k' p_k^{v+1}|
  double terminal_max = 0.0;     // |p_N^i|
};

MpResiduals mp_residuals(const Trajectory& traj, const CostateTrace& trace,
                         const Ensemble& ens, const ConstraintPolicy& policy);

/// Thresholds applied by verify_instance.
struct VerifyThresholds {
  double cost_gap = 1e-7;        // |J_dist - J_oracle| / (1 + J_oracle)
  double control_gap = 1e-6;     // max abs per-step control difference
  double residual = 1e-8;        // maximum-principle residuals
  double constraint = 1e-9;      // max |ubar_k - Fbar_k xbar_k|
};

struct VerificationReport {
  double oracle_cost = 0.0;
  double distributed_cost = 0.0;  // accumulated along the simulated law
  double closed_form_cost = 0.0;  // value-matrix formula
  double cost_gap = 0.0;
  double closed_form_gap = 0.0;
  double control_gap = 0.0;
  double multiplier_gap = 0.0;    // oracle multipliers vs p_k^{v+1}
  double constraint_residual = 0.0;
  MpResiduals residuals;
  bool passed = false;
};

/// Synthesizes the schedule and checks it against the oracle and the
/// maximum-principle conditions.
VerificationReport verify_instance(const Ensemble& ens, const ConstraintPolicy& policy,
                                   int horizon, const InitialCondition& ic,
                                   const VerifyThresholds& thr = {},
                                   const Tolerances& tol = {});

/// As above but checks a caller-supplied schedule (e.g. a corrupted one).
VerificationReport verify_schedule(const Ensemble& ens, const ConstraintPolicy& policy,
                                   const GainSchedule& schedule,
                                   const InitialCondition& ic,
                                   const VerifyThresholds& thr = {},
                                   const Tolerances& tol = {});

struct RandomLimits {
  int max_states = 3;
  int max_inputs = 3;
  int max_count = 4;
  int max_horizon = 8;
};

struct RandomInstance {
  Ensemble ens;
  ConstraintPolicy policy;
  int horizon;
  InitialCondition ic;
};

/// Q = G'G, R = H'H + I, every other entry uniform in [-1, 1]; mu redrawn until
/// sum mu^2 >= 1e-3.
RandomInstance random_instance(std::mt19937_64& rng, const RandomLimits& limits = {});

/// Runs verify_instance on `count` instances drawn from one seeded generator.
std::vector<VerificationReport> run_campaign(std::uint64_t seed, int count,
                                             const VerifyThresholds& thr = {},
                                             const RandomLimits& limits = {});

}  // namespace coordlqr
