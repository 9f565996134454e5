#pragma once

#include <vector>

#include "coordlqr/are.hpp"
#include "coordlqr/riccati.hpp"

namespace coordlqr {

/// Closed-loop record of the ensemble. states/avg_state hold steps + 1 entries
/// (k = 0..steps); controls, avg_control, stage_costs and constraint_residuals
/// hold one entry per applied step (k = 0..steps-1).
struct Trajectory {
  int steps = 0;
  std::vector<std::vector<Vector>> states;    // [k][i]
  std::vector<std::vector<Vector>> controls;  // [k][i]
  std::vector<Vector> avg_state;
  std::vector<Vector> avg_control;
  std::vector<double> stage_costs;
  std::vector<double> constraint_residuals;  // |ubar_k - Fbar_k xbar_k|_2
};

/// Runs u_k^i = K_k x_k^i + (mu_i/sum mu^2) Kbar_k xbar_k for `steps` steps
/// using a finite schedule. Throws HorizonExceeded if steps > N + 1.
Trajectory simulate(const Ensemble& ens, const GainSchedule& schedule,
                    const ConstraintPolicy& policy, const InitialCondition& ic,
                    int steps);

/// Same law with the stationary gains K, Kbar.
Trajectory simulate(const Ensemble& ens, const SteadySolution& steady,
                    const ConstraintPolicy& policy, const InitialCondition& ic,
                    int steps);

/// Applies prescribed controls controls[k][i] instead of a feedback law.
/// Only used to cross-check optimizers against the closed-loop law.
Trajectory simulate_open_loop(const Ensemble& ens, const ConstraintPolicy& policy,
                              const InitialCondition& ic,
                              const std::vector<std::vector<Vector>>& controls);

/// Sum of the recorded stage costs.
double accumulated_cost(const Trajectory& traj);

/// max_k |avg_control[k] - Fbar_k avg_state[k]|_2, recomputed from the record.
double constraint_check(const Trajectory& traj, const ConstraintPolicy& policy);

/// max_i |x^i|_2 at the last recorded step; infinity if the state overflowed.
double final_max_state_norm(const Trajectory& traj);

/// Per-subsystem average-feedback gains (mu_i / sum mu^2) Kbar.
std::vector<Matrix> average_feedback_gains(const Ensemble& ens, const Matrix& Kbar);

}  // namespace coordlqr
