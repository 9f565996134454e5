#include "coordlqr/riccati.hpp"

#include <algorithm>
#include <sstream>

namespace coordlqr {

namespace {

// Factorization of the inner matrix R + B'P B shared by both recursions.
struct InnerSolve {
  Matrix inner;  // R + B'P B
  Eigen::LLT<Matrix> llt;
  Matrix BtPA;  // B'P A
  Matrix G;     // (R + B'PB)^{-1} B'P A

  InnerSolve(const Matrix& P_next, const Ensemble& ens) {
    const Matrix BtP = ens.B().transpose() * P_next;
    inner = symmetrize(ens.R() + BtP * ens.B());
    llt.compute(inner);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::InnerMatrixSingular,
                  "R + B'PB failed its Cholesky factorization");
    }
    BtPA = BtP * ens.A();
    G = llt.solve(BtPA);
  }
};

void expect_square(const Matrix& M, int n, const char* name) {
  if (M.rows() != n || M.cols() != n) {
    std::ostringstream os;
    os << name << " is " << M.rows() << "x" << M.cols() << ", expected " << n
       << "x" << n;
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

}  // namespace

RiccatiStep riccati_step(const Matrix& P_next, const Ensemble& ens) {
  expect_square(P_next, ens.states(), "P_next");
  const InnerSolve s(P_next, ens);
  const Matrix& A = ens.A();

  RiccatiStep out;
  out.K = -s.G;
  out.P = symmetrize(ens.Q() + A.transpose() * P_next * A - s.BtPA.transpose() * s.G);

  const Matrix closed = A + ens.B() * out.K;
  const Matrix alt = symmetrize(ens.Q() + out.K.transpose() * ens.R() * out.K +
                                closed.transpose() * P_next * closed);
  out.form_gap = (out.P - alt).cwiseAbs().maxCoeff() / (1.0 + out.P.cwiseAbs().maxCoeff());
  return out;
}

Matrix pbar_step(const Matrix& Pbar_next, const Matrix& P_next, const Matrix& Fbar,
                 const Ensemble& ens) {
  expect_square(P_next, ens.states(), "P_next");
  expect_square(Pbar_next, ens.states(), "Pbar_next");
  if (Fbar.rows() != ens.inputs() || Fbar.cols() != ens.states()) {
    throw Error(ErrorKind::DimensionMismatch, "Fbar must be m x n");
  }
  const InnerSolve s(P_next, ens);
  const Matrix closed = ens.A() + ens.B() * Fbar;
  const Matrix cross = s.BtPA.transpose() * Fbar;  // A'P B F
  return symmetrize(closed.transpose() * Pbar_next * closed +
                    Fbar.transpose() * s.inner * Fbar + s.BtPA.transpose() * s.G +
                    cross + cross.transpose());
}

GainSchedule synthesize_finite(const Ensemble& ens, const ConstraintPolicy& policy,
                               int horizon) {
  if (horizon < 0) throw Error(ErrorKind::HorizonExceeded, "negative horizon");
  policy.check(ens, horizon);

  const auto steps = static_cast<std::size_t>(horizon) + 1;
  const int n = ens.states();
  GainSchedule out;
  out.horizon = horizon;
  out.P.assign(steps + 1, Matrix::Zero(n, n));
  out.Pbar.assign(steps + 1, Matrix::Zero(n, n));
  out.K.resize(steps);
  out.Kbar.resize(steps);
  out.Fbar.resize(steps);

  for (int k = horizon; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    const Matrix& F = policy.gain(k);
    auto step = riccati_step(out.P[ku + 1], ens);
    out.Pbar[ku] = pbar_step(out.Pbar[ku + 1], out.P[ku + 1], F, ens);
    out.P[ku] = std::move(step.P);
    out.Kbar[ku] = F - step.K;
    out.K[ku] = std::move(step.K);
    out.Fbar[ku] = F;
    out.max_form_gap = std::max(out.max_form_gap, step.form_gap);
  }
  return out;
}

double coordination_cost(const GainSchedule& schedule, const InitialCondition& ic,
                         const Ensemble& ens) {
  check_initial(ic, ens);
  const Vector xbar = weighted_average(ic, ens.mu());
  return xbar.dot(schedule.Pbar.front() * xbar) / ens.mu_norm_sq();
}

double optimal_cost(const GainSchedule& schedule, const InitialCondition& ic,
                    const Ensemble& ens) {
  check_initial(ic, ens);
  const Matrix& P0 = schedule.P.front();
  double total = 0.0;
  for (const auto& x : ic) total += x.dot(P0 * x);
  return total + coordination_cost(schedule, ic, ens);
}

std::vector<Matrix> naive_policy_value(const Ensemble& ens,
                                       const ConstraintPolicy& policy, int horizon) {
  if (horizon < 0) throw Error(ErrorKind::HorizonExceeded, "negative horizon");
  policy.check(ens, horizon);
  const int n = ens.states();
  std::vector<Matrix> S(static_cast<std::size_t>(horizon) + 2, Matrix::Zero(n, n));
  for (int k = horizon; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    const Matrix& F = policy.gain(k);
    const Matrix closed = ens.A() + ens.B() * F;
    S[ku] = symmetrize(ens.Q() + F.transpose() * ens.R() * F +
                       closed.transpose() * S[ku + 1] * closed);
  }
  return S;
}

}  // namespace coordlqr
