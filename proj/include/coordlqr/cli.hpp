#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "coordlqr/sim.hpp"

namespace coordlqr::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kNotStabilizable = 2,
  kVerificationFailure = 3,
};

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. The JSON report goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// step,subsystem,x_0..x_{n-1},u_0..u_{m-1}; the terminal state row leaves the
/// control columns empty.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// step,xbar_0..,ubar_0..,stage_cost,constraint_residual; the terminal row
/// leaves everything after the average state empty.
void write_averages_csv(std::ostream& os, const Trajectory& traj);

}  // namespace coordlqr::cli
