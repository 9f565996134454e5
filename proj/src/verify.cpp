#include "coordlqr/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coordlqr {

std::vector<std::vector<Vector>> OracleSolution::by_step() const {
  std::vector<std::vector<Vector>> out(static_cast<std::size_t>(horizon) + 1);
  for (int k = 0; k <= horizon; ++k) {
    auto& row = out[static_cast<std::size_t>(k)];
    row.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      row.push_back(controls.segment((k * count + i) * inputs, inputs));
    }
  }
  return out;
}

OracleSolution centralized_oracle(const Ensemble& ens, const ConstraintPolicy& policy,
                                  int horizon, const InitialCondition& ic,
                                  const OracleOptions& opts, const Tolerances& tol) {
  if (horizon < 0) throw Error(ErrorKind::HorizonExceeded, "negative horizon");
  check_initial(ic, ens);
  if (opts.constrained) policy.check(ens, horizon);

  const int n = ens.states();
  const int m = ens.inputs();
  const int v = ens.count();
  const int T = horizon + 1;  // steps carrying cost and constraint
  const long unknowns = static_cast<long>(m) * v * T;
  if (unknowns > opts.max_unknowns) {
    std::ostringstream os;
    os << unknowns << " control unknowns exceed the dense limit " << opts.max_unknowns;
    throw Error(ErrorKind::ProblemTooLarge, os.str());
  }

  // Per-subsystem condensing, identical for every i:
  //   x^i = Gamma u^i + Phi xi^i, with x^i stacked over k = 0..N.
  Matrix Gamma = Matrix::Zero(n * T, m * T);
  Matrix Phi(n * T, n);
  {
    Matrix Ak = Matrix::Identity(n, n);
    for (int k = 0; k < T; ++k) {
      Phi.middleRows(k * n, n) = Ak;
      Ak = ens.A() * Ak;
    }
    for (int k = 1; k < T; ++k) {
      // x_k = A x_{k-1} + B u_{k-1}
      Gamma.block(k * n, 0, n, m * T) = ens.A() * Gamma.block((k - 1) * n, 0, n, m * T);
      Gamma.block(k * n, (k - 1) * m, n, m) += ens.B();
    }
  }
  Matrix Qb = Matrix::Zero(n * T, n * T);
  Matrix Rb = Matrix::Zero(m * T, m * T);
  for (int k = 0; k < T; ++k) {
    Qb.block(k * n, k * n, n, n) = ens.Q();
    Rb.block(k * m, k * m, m, m) = ens.R();
  }
  const Matrix QG = Qb * Gamma;
  const Matrix Hi = symmetrize(Gamma.transpose() * QG + Rb);

  // Subsystem-major ordering internally: u^i occupies [i*m*T, +m*T).
  const int nu = static_cast<int>(unknowns);
  const int nc = opts.constrained ? m * T : 0;
  Matrix kkt = Matrix::Zero(nu + nc, nu + nc);
  Vector rhs = Vector::Zero(nu + nc);
  double constant = 0.0;
  for (int i = 0; i < v; ++i) {
    const Vector phi = Phi * ic[static_cast<std::size_t>(i)];
    kkt.block(i * m * T, i * m * T, m * T, m * T) = Hi;
    rhs.segment(i * m * T, m * T) = -QG.transpose() * phi;
    constant += phi.dot(Qb * phi);
  }
  if (opts.constrained) {
    const Vector xbar0 = weighted_average(ic, ens.mu());
    Matrix Ak = Matrix::Identity(n, n);
    for (int k = 0; k < T; ++k) {
      const Matrix& F = policy.gain(k);
      // Coefficient of u^i in row block k is mu_i (E_k - F Gamma_k).
      Matrix row = -F * Gamma.middleRows(k * n, n);
      row.middleCols(k * m, m) += Matrix::Identity(m, m);
      for (int i = 0; i < v; ++i) {
        const double w = ens.mu()(i);
        kkt.block(nu + k * m, i * m * T, m, m * T) = w * row;
        kkt.block(i * m * T, nu + k * m, m * T, m) = w * row.transpose();
      }
      rhs.segment(nu + k * m, m) = F * Ak * xbar0;
      Ak = ens.A() * Ak;
    }
  }

  Eigen::FullPivLU<Matrix> lu(kkt);
  lu.setThreshold(tol.rank);
  if (lu.rank() < nu + nc) {
    std::ostringstream os;
    os << "KKT matrix rank " << lu.rank() << " < " << nu + nc;
    throw Error(ErrorKind::SingularKKT, os.str());
  }
  const Vector sol = lu.solve(rhs);
  const double scale =
      kkt.cwiseAbs().rowwise().sum().maxCoeff() * (1.0 + sol.cwiseAbs().maxCoeff()) +
      rhs.cwiseAbs().maxCoeff();
  const double residual = (kkt * sol - rhs).cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
  if (!(residual <= tol.kkt)) {
    std::ostringstream os;
    os << "KKT residual " << residual << " exceeds " << tol.kkt;
    throw Error(ErrorKind::SingularKKT, os.str());
  }

  OracleSolution out;
  out.horizon = horizon;
  out.count = v;
  out.inputs = m;
  out.kkt_residual = residual;
  out.controls.resize(nu);
  double cost = constant;
  for (int i = 0; i < v; ++i) {
    const Vector ui = sol.segment(i * m * T, m * T);
    const Vector phi = Phi * ic[static_cast<std::size_t>(i)];
    cost += ui.dot(Hi * ui) + 2.0 * ui.dot(QG.transpose() * phi);
    for (int k = 0; k < T; ++k) {
      out.controls.segment((k * v + i) * m, m) = ui.segment(k * m, m);
    }
  }
  out.cost = cost;
  out.multipliers = sol.tail(nc);
  return out;
}

CostateTrace costates_closed_form(const Trajectory& traj, const GainSchedule& schedule,
                                  const Ensemble& ens) {
  const int N = schedule.horizon;
  if (traj.steps != N + 1) {
    std::ostringstream os;
    os << "costates need a trajectory of " << N + 1 << " steps, got " << traj.steps;
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
  const double s = ens.mu_norm_sq();
  const auto v = static_cast<std::size_t>(ens.count());
  CostateTrace trace;
  trace.p.resize(static_cast<std::size_t>(N) + 1);
  trace.p_extra.resize(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const Matrix& P1 = schedule.P[ku + 1];
    const Matrix& Pbar1 = schedule.Pbar[ku + 1];
    const Vector shared = Pbar1 * traj.avg_state[ku + 1];
    auto& pk = trace.p[ku];
    pk.resize(v);
    for (std::size_t i = 0; i < v; ++i) {
      pk[i] = P1 * traj.states[ku + 1][i] + ens.share(static_cast<int>(i)) * shared;
    }
    const Matrix Psum = P1 + Pbar1;
    const Matrix BtPsum = ens.B().transpose() * Psum;
    trace.p_extra[ku] =
        -((ens.R() + BtPsum * ens.B()) * schedule.Fbar[ku] + BtPsum * ens.A()) *
        traj.avg_state[ku] / s;
  }
  return trace;
}

MpResiduals mp_residuals(const Trajectory& traj, const CostateTrace& trace,
                         const Ensemble& ens, const ConstraintPolicy& policy) {
  MpResiduals r;
  const int last = static_cast<int>(trace.p.size()) - 1;
  if (last < 0) return r;
  if (traj.steps < last + 1) {
    throw Error(ErrorKind::DimensionMismatch, "trajectory shorter than costate trace");
  }
  const auto v = static_cast<std::size_t>(ens.count());
  for (int k = 0; k <= last; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < v; ++i) {
      const double mu_i = ens.mu()(static_cast<Eigen::Index>(i));
      const Vector eq = ens.R() * traj.controls[ku][i] +
                        ens.B().transpose() * trace.p[ku][i] + mu_i * trace.p_extra[ku];
      r.equilibrium_max = std::max(r.equilibrium_max, eq.norm());
      if (k >= 1) {
        const Vector adj = trace.p[ku - 1][i] - ens.Q() * traj.states[ku][i] -
                           ens.A().transpose() * trace.p[ku][i] +
                           mu_i * policy.gain(k).transpose() * trace.p_extra[ku];
        r.adjoint_max = std::max(r.adjoint_max, adj.norm());
      }
    }
  }
  for (const auto& p : trace.p[static_cast<std::size_t>(last)]) {
    r.terminal_max = std::max(r.terminal_max, p.norm());
  }
  return r;
}

VerificationReport verify_schedule(const Ensemble& ens, const ConstraintPolicy& policy,
                                   const GainSchedule& schedule,
                                   const InitialCondition& ic,
                                   const VerifyThresholds& thr, const Tolerances& tol) {
  const int N = schedule.horizon;
  VerificationReport rep;
  const auto oracle = centralized_oracle(ens, policy, N, ic, {}, tol);
  const auto traj = simulate(ens, schedule, policy, ic, N + 1);

  rep.oracle_cost = oracle.cost;
  rep.distributed_cost = accumulated_cost(traj);
  rep.closed_form_cost = optimal_cost(schedule, ic, ens);
  rep.cost_gap = std::abs(rep.distributed_cost - rep.oracle_cost) / (1.0 + rep.oracle_cost);
  rep.closed_form_gap =
      std::abs(rep.closed_form_cost - rep.oracle_cost) / (1.0 + rep.oracle_cost);

  const auto oracle_u = oracle.by_step();
  for (std::size_t k = 0; k < oracle_u.size(); ++k) {
    for (std::size_t i = 0; i < oracle_u[k].size(); ++i) {
      rep.control_gap = std::max(
          rep.control_gap, (oracle_u[k][i] - traj.controls[k][i]).cwiseAbs().maxCoeff());
    }
  }

  const auto trace = costates_closed_form(traj, schedule, ens);
  for (std::size_t k = 0; k < trace.p_extra.size(); ++k) {
    const Vector lam = oracle.multipliers.segment(
        static_cast<Eigen::Index>(k) * ens.inputs(), ens.inputs());
    rep.multiplier_gap =
        std::max(rep.multiplier_gap, (lam - trace.p_extra[k]).cwiseAbs().maxCoeff());
  }
  rep.residuals = mp_residuals(traj, trace, ens, policy);
  rep.constraint_residual = constraint_check(traj, policy);

  rep.passed = rep.cost_gap <= thr.cost_gap && rep.closed_form_gap <= thr.cost_gap &&
               rep.control_gap <= thr.control_gap &&
               rep.residuals.equilibrium_max <= thr.residual &&
               rep.residuals.adjoint_max <= thr.residual &&
               rep.residuals.terminal_max == 0.0 &&
               rep.constraint_residual <= thr.constraint;
  return rep;
}

VerificationReport verify_instance(const Ensemble& ens, const ConstraintPolicy& policy,
                                   int horizon, const InitialCondition& ic,
                                   const VerifyThresholds& thr, const Tolerances& tol) {
  return verify_schedule(ens, policy, synthesize_finite(ens, policy, horizon), ic, thr,
                         tol);
}

RandomInstance random_instance(std::mt19937_64& rng, const RandomLimits& limits) {
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto fill = [&](int r, int c) {
    Matrix M(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) M(i, j) = entry(rng);
    return M;
  };

  const int n = pick(1, limits.max_states);
  const int m = pick(1, limits.max_inputs);
  const int v = pick(1, limits.max_count);
  const int N = pick(0, limits.max_horizon);

  EnsembleData d;
  d.A = fill(n, n);
  d.B = fill(n, m);
  const Matrix G = fill(n, n);
  const Matrix H = fill(m, m);
  d.Q = G.transpose() * G;
  d.R = H.transpose() * H + Matrix::Identity(m, m);
  do {
    d.mu = fill(v, 1);
  } while (d.mu.squaredNorm() < 1e-3);

  std::vector<Matrix> gains;
  for (int k = 0; k <= N; ++k) gains.push_back(fill(m, n));
  InitialCondition ic;
  for (int i = 0; i < v; ++i) ic.push_back(fill(n, 1));

  return RandomInstance{Ensemble::validate(d), ConstraintPolicy::schedule(std::move(gains)),
                        N, std::move(ic)};
}

std::vector<VerificationReport> run_campaign(std::uint64_t seed, int count,
                                             const VerifyThresholds& thr,
                                             const RandomLimits& limits) {
  std::mt19937_64 rng(seed);
  std::vector<VerificationReport> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int c = 0; c < count; ++c) {
    auto inst = random_instance(rng, limits);
    out.push_back(verify_instance(inst.ens, inst.policy, inst.horizon, inst.ic, thr));
  }
  return out;
}

}  // namespace coordlqr
