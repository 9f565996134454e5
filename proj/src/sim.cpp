#include "coordlqr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace coordlqr {

namespace {

using ControlLaw =
    std::function<std::vector<Vector>(int k, const std::vector<Vector>& x, const Vector& xbar)>;

Trajectory run(const Ensemble& ens, const ConstraintPolicy& policy,
               const InitialCondition& ic, int steps, const ControlLaw& law) {
  check_initial(ic, ens);
  if (steps < 0) throw Error(ErrorKind::HorizonExceeded, "negative step count");
  const auto v = static_cast<std::size_t>(ens.count());

  Trajectory t;
  t.steps = steps;
  t.states.reserve(static_cast<std::size_t>(steps) + 1);
  t.states.push_back(ic);
  t.avg_state.push_back(weighted_average(ic, ens.mu()));

  for (int k = 0; k < steps; ++k) {
    const auto& x = t.states.back();
    const Vector& xbar = t.avg_state.back();
    std::vector<Vector> u = law(k, x, xbar);
    if (u.size() != v) {
      throw Error(ErrorKind::DimensionMismatch, "control count differs from subsystem count");
    }

    std::vector<Vector> x_next(v);
    double cost = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      if (u[i].size() != ens.inputs()) {
        throw Error(ErrorKind::DimensionMismatch, "control length differs from m");
      }
      x_next[i] = ens.A() * x[i] + ens.B() * u[i];
      cost += x[i].dot(ens.Q() * x[i]) + u[i].dot(ens.R() * u[i]);
    }
    Vector ubar = weighted_average(u, ens.mu());
    t.constraint_residuals.push_back((ubar - policy.gain(k) * xbar).norm());
    t.stage_costs.push_back(cost);
    t.avg_control.push_back(std::move(ubar));
    t.controls.push_back(std::move(u));
    t.avg_state.push_back(weighted_average(x_next, ens.mu()));
    t.states.push_back(std::move(x_next));
  }
  return t;
}

std::vector<Vector> distributed_law(const Ensemble& ens, const Matrix& K,
                                    const Matrix& Kbar, const std::vector<Vector>& x,
                                    const Vector& xbar) {
  const Vector shared = Kbar * xbar;
  std::vector<Vector> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    u[i] = K * x[i] + ens.share(static_cast<int>(i)) * shared;
  }
  return u;
}

}  // namespace

Trajectory simulate(const Ensemble& ens, const GainSchedule& schedule,
                    const ConstraintPolicy& policy, const InitialCondition& ic,
                    int steps) {
  if (steps > schedule.horizon + 1) {
    std::ostringstream os;
    os << steps << " steps requested from a schedule with horizon " << schedule.horizon;
    throw Error(ErrorKind::HorizonExceeded, os.str());
  }
  policy.check(ens, -1);
  return run(ens, policy, ic, steps,
             [&](int k, const std::vector<Vector>& x, const Vector& xbar) {
               const auto ku = static_cast<std::size_t>(k);
               return distributed_law(ens, schedule.K[ku], schedule.Kbar[ku], x, xbar);
             });
}

Trajectory simulate(const Ensemble& ens, const SteadySolution& steady,
                    const ConstraintPolicy& policy, const InitialCondition& ic,
                    int steps) {
  policy.check(ens, -1);
  return run(ens, policy, ic, steps,
             [&](int, const std::vector<Vector>& x, const Vector& xbar) {
               return distributed_law(ens, steady.K, steady.Kbar, x, xbar);
             });
}

Trajectory simulate_open_loop(const Ensemble& ens, const ConstraintPolicy& policy,
                              const InitialCondition& ic,
                              const std::vector<std::vector<Vector>>& controls) {
  return run(ens, policy, ic, static_cast<int>(controls.size()),
             [&](int k, const std::vector<Vector>&, const Vector&) {
               return controls[static_cast<std::size_t>(k)];
             });
}

double accumulated_cost(const Trajectory& traj) {
  double total = 0.0;
  for (double c : traj.stage_costs) total += c;
  return total;
}

double constraint_check(const Trajectory& traj, const ConstraintPolicy& policy) {
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.avg_control.size(); ++k) {
    const Vector gap =
        traj.avg_control[k] - policy.gain(static_cast<int>(k)) * traj.avg_state[k];
    worst = std::max(worst, gap.norm());
  }
  return worst;
}

double final_max_state_norm(const Trajectory& traj) {
  double worst = 0.0;
  if (traj.states.empty()) return worst;
  for (const auto& x : traj.states.back()) {
    const double r = x.norm();
    // overflowed trajectories must not read as decayed
    if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, r);
  }
  return worst;
}

std::vector<Matrix> average_feedback_gains(const Ensemble& ens, const Matrix& Kbar) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(ens.count()));
  for (int i = 0; i < ens.count(); ++i) out.push_back(ens.share(i) * Kbar);
  return out;
}

}  // namespace coordlqr
