#include "coordlqr/are.hpp"

#include <cmath>
#include <sstream>

#include "coordlqr/riccati.hpp"

namespace coordlqr {

namespace {

constexpr double kBlowUp = 1e150;

double rel_change(const Matrix& next, const Matrix& prev) {
  return (next - prev).cwiseAbs().maxCoeff() / (1.0 + next.cwiseAbs().maxCoeff());
}

bool blown_up(const Matrix& M) {
  return !M.allFinite() || M.cwiseAbs().maxCoeff() > kBlowUp;
}

struct Iterate {
  bool converged = false;
  Matrix P;
  int iterations = 0;
};

Iterate riccati_value_iteration(const Ensemble& ens, Matrix P, const Tolerances& tol) {
  Iterate out;
  for (int it = 1; it <= tol.max_iter; ++it) {
    Matrix next = riccati_step(P, ens).P;
    out.iterations = it;
    if (blown_up(next)) {
      out.P = std::move(next);
      return out;
    }
    const double change = rel_change(next, P);
    P = std::move(next);
    if (change < tol.are) {
      out.converged = true;
      break;
    }
  }
  out.P = std::move(P);
  return out;
}

Iterate pbar_value_iteration(const Matrix& P, const Matrix& Fbar, const Ensemble& ens,
                             const Tolerances& tol) {
  Iterate out;
  Matrix Pbar = Matrix::Zero(ens.states(), ens.states());
  for (int it = 1; it <= tol.max_iter; ++it) {
    Matrix next = pbar_step(Pbar, P, Fbar, ens);
    out.iterations = it;
    if (blown_up(next)) {
      out.P = std::move(next);
      return out;
    }
    const double change = rel_change(next, Pbar);
    Pbar = std::move(next);
    if (change < tol.are) {
      out.converged = true;
      break;
    }
  }
  out.P = std::move(Pbar);
  return out;
}

// Index of entry (i, j), i <= j, in the half-vectorization.
int half_index(int i, int j, int n) { return i * n - i * (i - 1) / 2 + (j - i); }

}  // namespace

std::string_view to_string(Verdict v) {
  return v == Verdict::stabilizable ? "stabilizable" : "not_stabilizable";
}

double are_residual(const Matrix& P, const Ensemble& ens) {
  return rel_change(riccati_step(P, ens).P, P);
}

double pbar_residual(const Matrix& Pbar, const Matrix& P, const Matrix& Fbar,
                     const Ensemble& ens) {
  return rel_change(pbar_step(Pbar, P, Fbar, ens), Pbar);
}

Matrix sqrt_factor(const Matrix& Q, double tol_psd) {
  if (Q.rows() != Q.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "Q must be square");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(Q));
  Vector ev = es.eigenvalues();
  const double scale = 1.0 + ev.cwiseAbs().maxCoeff();
  if (ev.size() > 0 && ev.minCoeff() < -tol_psd * scale) {
    std::ostringstream os;
    os << "smallest eigenvalue of Q is " << ev.minCoeff();
    throw Error(ErrorKind::QNotPSD, os.str());
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

bool observability(const Matrix& A, const Matrix& C, double tol_rank) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || C.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "observability: A is n x n, C is p x n");
  }
  const Eigen::Index p = C.rows();
  Matrix O(p * n, n);
  Matrix block = C;
  for (Eigen::Index k = 0; k < n; ++k) {
    O.middleRows(k * p, p) = block;
    block = block * A;
  }
  const Vector sv = Eigen::JacobiSVD<Matrix>(O).singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return false;
  const auto rank = (sv.array() > tol_rank * sv(0)).count();
  return rank == n;
}

double spectral_radius(const Matrix& M) {
  if (M.rows() != M.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "spectral radius of a non-square matrix");
  }
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

AreSolution solve_are(const Ensemble& ens, const Tolerances& tol,
                      const std::optional<Matrix>& seed) {
  const int n = ens.states();
  Matrix start = seed.value_or(Matrix::Zero(n, n));
  if (start.rows() != n || start.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "ARE seed must be n x n");
  }
  auto it = riccati_value_iteration(ens, symmetrize(start), tol);
  if (!it.converged) {
    std::ostringstream os;
    os << "Riccati value iteration did not settle after " << it.iterations
       << " iterations";
    throw Error(ErrorKind::NoConvergence, os.str());
  }
  AreSolution out;
  out.P = std::move(it.P);
  out.iterations = it.iterations;
  out.residual = are_residual(out.P, ens);
  out.observable = observability(ens.A(), sqrt_factor(ens.Q(), tol.psd), tol.rank);
  if (out.observable && !is_pd(out.P, tol.psd)) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "ARE limit is not positive definite although (A, C) is observable");
  }
  return out;
}

Matrix solve_pbar(const Matrix& P, const Matrix& Fbar, const Ensemble& ens,
                  const Tolerances& tol) {
  const int n = ens.states();
  if (Fbar.rows() != ens.inputs() || Fbar.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "Fbar must be m x n");
  }
  const Matrix closed = ens.A() + ens.B() * Fbar;
  const double rho = spectral_radius(closed);
  if (rho >= 1.0) {
    std::ostringstream os;
    os << "rho(A + B Fbar) = " << rho;
    throw Error(ErrorKind::ClosedLoopUnstable, os.str());
  }

  // W is the Pbar_next = 0 value of the coordination step.
  const Matrix W = pbar_step(Matrix::Zero(n, n), P, Fbar, ens);

  // Pbar - closed' Pbar closed = W, restricted to symmetric Pbar.
  const int dim = n * (n + 1) / 2;
  Matrix L(dim, dim);
  Vector rhs(dim);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Matrix E = Matrix::Zero(n, n);
      E(i, j) = 1.0;
      E(j, i) = 1.0;
      const Matrix image = E - closed.transpose() * E * closed;
      const int col = half_index(i, j, n);
      for (int r = 0; r < n; ++r) {
        for (int c = r; c < n; ++c) L(half_index(r, c, n), col) = image(r, c);
      }
      rhs(col) = W(i, j);
    }
  }
  Eigen::FullPivLU<Matrix> lu(L);
  if (lu.isInvertible()) {
    const Vector h = lu.solve(rhs);
    Matrix Pbar(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Pbar(i, j) = h(half_index(i, j, n));
        Pbar(j, i) = Pbar(i, j);
      }
    }
    if (pbar_residual(Pbar, P, Fbar, ens) < tol.are) return Pbar;
  }
  return solve_pbar_by_iteration(P, Fbar, ens, tol);
}

Matrix solve_pbar_by_iteration(const Matrix& P, const Matrix& Fbar,
                               const Ensemble& ens, const Tolerances& tol) {
  auto it = pbar_value_iteration(P, Fbar, ens, tol);
  if (!it.converged) {
    std::ostringstream os;
    os << "coordination fixed-point iteration did not settle after "
       << it.iterations << " iterations";
    throw Error(ErrorKind::NoConvergence, os.str());
  }
  return it.P;
}

SteadyGains gains(const Matrix& P, const Matrix& Fbar, const Ensemble& ens) {
  const Matrix BtP = ens.B().transpose() * P;
  Eigen::LLT<Matrix> llt(symmetrize(ens.R() + BtP * ens.B()));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::InnerMatrixSingular,
                "R + B'PB failed its Cholesky factorization");
  }
  SteadyGains g;
  g.K = -llt.solve(BtP * ens.A());
  g.Kbar = Fbar - g.K;
  return g;
}

CoupledLimit coupled_value_iteration(const Ensemble& ens, const Matrix& Fbar,
                                     const Tolerances& tol) {
  const int n = ens.states();
  CoupledLimit out;
  Matrix P = Matrix::Zero(n, n);
  Matrix Pbar = Matrix::Zero(n, n);
  for (int it = 1; it <= tol.max_iter; ++it) {
    // Both updates read the previous P, as in the backward recursion.
    Matrix Pbar_next = pbar_step(Pbar, P, Fbar, ens);
    Matrix P_next = riccati_step(P, ens).P;
    out.iterations = it;
    if (blown_up(P_next) || blown_up(Pbar_next)) break;
    const double change = std::max(rel_change(P_next, P), rel_change(Pbar_next, Pbar));
    P = std::move(P_next);
    Pbar = std::move(Pbar_next);
    if (change < tol.are) {
      out.converged = true;
      break;
    }
  }
  out.P = std::move(P);
  out.Pbar = std::move(Pbar);
  return out;
}

SteadySolution solve_steady(const Ensemble& ens, const Matrix& Fbar,
                            const Tolerances& tol) {
  auto are = solve_are(ens, tol);
  SteadySolution out;
  out.Pbar = solve_pbar(are.P, Fbar, ens, tol);
  auto g = gains(are.P, Fbar, ens);
  out.K = std::move(g.K);
  out.Kbar = std::move(g.Kbar);
  out.Fbar = Fbar;
  out.iterations = are.iterations;
  out.residual_P = are.residual;
  out.residual_Pbar = pbar_residual(out.Pbar, are.P, Fbar, ens);
  out.P = std::move(are.P);
  return out;
}

StabilityReport stability_report(const Ensemble& ens, const Matrix& Fbar,
                                 const Tolerances& tol) {
  if (Fbar.rows() != ens.inputs() || Fbar.cols() != ens.states()) {
    throw Error(ErrorKind::DimensionMismatch, "Fbar must be m x n");
  }
  StabilityReport rep;
  rep.spectral_radius_closed_loop = spectral_radius(ens.A() + ens.B() * Fbar);
  rep.verdict = rep.spectral_radius_closed_loop < 1.0 ? Verdict::stabilizable
                                                      : Verdict::not_stabilizable;
  rep.observable = observability(ens.A(), sqrt_factor(ens.Q(), tol.psd), tol.rank);

  const int n = ens.states();
  auto riccati = riccati_value_iteration(ens, Matrix::Zero(n, n), tol);
  rep.riccati_converged = riccati.converged;
  if (riccati.converged) {
    rep.P = riccati.P;
    rep.p_positive_definite = is_pd(riccati.P, tol.psd);

    std::optional<Matrix> Pbar;
    if (rep.verdict == Verdict::stabilizable) {
      Pbar = solve_pbar(riccati.P, Fbar, ens, tol);
    } else {
      // No unique Lyapunov solution is guaranteed here, so only the limit of
      // the recursion counts as a solution.
      auto it = pbar_value_iteration(riccati.P, Fbar, ens, tol);
      if (it.converged) Pbar = std::move(it.P);
    }
    if (Pbar) {
      rep.are_solved = true;
      rep.p_plus_pbar_positive_definite = is_pd(riccati.P + *Pbar, tol.psd);
      SteadySolution s;
      auto g = gains(riccati.P, Fbar, ens);
      s.P = riccati.P;
      s.Pbar = *Pbar;
      s.K = std::move(g.K);
      s.Kbar = std::move(g.Kbar);
      s.Fbar = Fbar;
      s.iterations = riccati.iterations;
      s.residual_P = are_residual(s.P, ens);
      s.residual_Pbar = pbar_residual(s.Pbar, s.P, Fbar, ens);
      rep.solution = std::move(s);
    }
  }

  const bool are_verdict =
      rep.are_solved && rep.p_positive_definite && rep.p_plus_pbar_positive_definite;
  const bool rho_verdict = rep.verdict == Verdict::stabilizable;
  if (!rep.observable) {
    rep.note = "(A, C) not observable; equivalence of the stabilization conditions "
               "is not guaranteed";
  } else if (are_verdict != rho_verdict) {
    rep.consistent = false;
    std::ostringstream os;
    os << "rho test says " << to_string(rep.verdict)
       << " but coupled AREs " << (are_verdict ? "have" : "lack")
       << " a positive definite solution";
    rep.note = os.str();
  }
  return rep;
}

}  // namespace coordlqr
