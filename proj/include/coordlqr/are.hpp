#pragma once

#include <optional>
#include <string>

#include "coordlqr/model.hpp"

namespace coordlqr {

struct AreSolution {
  Matrix P;
  int iterations = 0;
  /// Fixed-point residual |riccati_step(P) - P|_max / (1 + |P|_max).
  double residual = 0.0;
  bool observable = false;
};

/// Solves P = Q + A'PA - A'PB(R+B'PB)^{-1}B'PA by value iteration of the
/// Riccati difference equation started at `seed` (zero when empty). Stops when
/// successive iterates differ by less than tol.are relative to 1 + |P|.
/// Throws NoConvergence after tol.max_iter steps or on blow-up, and
/// NotPositiveDefinite if (A, C) with C'C = Q is observable but the limit is
/// not positive definite.
AreSolution solve_are(const Ensemble& ens, const Tolerances& tol = {},
                      const std::optional<Matrix>& seed = std::nullopt);

/// Solves the coordination ARE
///   Pbar = (A+BF)'Pbar(A+BF) + W,
///   W = F'(R+B'PB)F + A'PB(R+B'PB)^{-1}B'PA + A'PBF + F'B'PA
/// as a linear system in the n(n+1)/2 free entries of Pbar, falling back to
/// fixed-point iteration if that solve is ill-posed. Throws ClosedLoopUnstable
/// if rho(A+BF) >= 1.
Matrix solve_pbar(const Matrix& P, const Matrix& Fbar, const Ensemble& ens,
                  const Tolerances& tol = {});

/// The same equation solved only by fixed-point iteration of pbar_step from
/// zero. Throws NoConvergence if it does not settle within tol.max_iter.
Matrix solve_pbar_by_iteration(const Matrix& P, const Matrix& Fbar,
                               const Ensemble& ens, const Tolerances& tol = {});

/// |pbar_step(Pbar, P, F) - Pbar|_max / (1 + |Pbar|_max)
double pbar_residual(const Matrix& Pbar, const Matrix& P, const Matrix& Fbar,
                     const Ensemble& ens);

/// |riccati_step(P) - P|_max / (1 + |P|_max)
double are_residual(const Matrix& P, const Ensemble& ens);

struct SteadyGains {
  Matrix K;     // -(R+B'PB)^{-1}B'PA
  Matrix Kbar;  // Fbar - K
};

SteadyGains gains(const Matrix& P, const Matrix& Fbar, const Ensemble& ens);

/// Returns C with C'C = Q (symmetric square root). Eigenvalues within tol_psd
/// below zero are clamped; anything more negative throws QNotPSD.
Matrix sqrt_factor(const Matrix& Q, double tol_psd = 1e-9);

/// Rank test on [C; CA; ...; CA^{n-1}] with singular values counted above
/// tol_rank times the largest one.
bool observability(const Matrix& A, const Matrix& C, double tol_rank = 1e-10);

double spectral_radius(const Matrix& M);

/// Joint value iteration of (P_0(N), Pbar_0(N)) for constant Fbar as N grows,
/// i.e. the finite-horizon synthesis pushed to its limit. Reports whether both
/// sequences settle; never throws on divergence.
struct CoupledLimit {
  bool converged = false;
  Matrix P;
  Matrix Pbar;
  int iterations = 0;
};

CoupledLimit coupled_value_iteration(const Ensemble& ens, const Matrix& Fbar,
                                     const Tolerances& tol = {});

/// Infinite-horizon optimum for constant Fbar.
struct SteadySolution {
  Matrix P;
  Matrix Pbar;
  Matrix K;
  Matrix Kbar;
  Matrix Fbar;
  int iterations = 0;
  double residual_P = 0.0;
  double residual_Pbar = 0.0;
};

/// solve_are + solve_pbar + gains. Propagates their errors.
SteadySolution solve_steady(const Ensemble& ens, const Matrix& Fbar,
                            const Tolerances& tol = {});

enum class Verdict { stabilizable, not_stabilizable };

std::string_view to_string(Verdict v);

struct StabilityReport {
  double spectral_radius_closed_loop = 0.0;  // rho(A + B Fbar)
  bool observable = false;                   // (A, C) with C'C = Q
  bool riccati_converged = false;            // first ARE alone
  bool are_solved = false;                   // both coupled AREs
  bool p_positive_definite = false;
  bool p_plus_pbar_positive_definite = false;
  Verdict verdict = Verdict::not_stabilizable;
  /// False when the three equivalent conditions disagree on an observable
  /// instance; `note` then says which.
  bool consistent = true;
  std::string note;
  std::optional<SteadySolution> solution;
  /// P from the first ARE when it converged, even if Pbar does not exist.
  std::optional<Matrix> P;
};

/// Verdict from rho(A + B Fbar) < 1, cross-checked against ARE solvability and
/// the definiteness of P and P + Pbar.
StabilityReport stability_report(const Ensemble& ens, const Matrix& Fbar,
                                 const Tolerances& tol = {});

}  // namespace coordlqr
