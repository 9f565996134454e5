#pragma once

#include <cmath>
#include <random>

#include "coordlqr/are.hpp"
#include "coordlqr/sim.hpp"
#include "coordlqr/verify.hpp"

namespace coordlqr::testing {

inline Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

/// Five scalar subsystems, A=2, B=1, Q=R=1, mu=(0.3,0.2,0.3,0.1,0.4).
inline Ensemble five_subsystems() {
  EnsembleData d;
  d.A = scalar(2.0);
  d.B = scalar(1.0);
  d.Q = scalar(1.0);
  d.R = scalar(1.0);
  d.mu = Vector(5);
  d.mu << 0.3, 0.2, 0.3, 0.1, 0.4;
  return Ensemble::validate(d);
}

inline Matrix five_subsystems_fbar() { return scalar(-1.5); }

inline InitialCondition five_subsystems_ic() {
  InitialCondition ic;
  for (double x : {3.0, 2.0, 1.0, 4.0, 5.0}) ic.push_back(Vector::Constant(1, x));
  return ic;
}

// Closed forms for the scalar system above, used as independent oracles.
//   P solves P^2 - 4P - 1 = 0, so P = 2 + sqrt(5) and K = -2P/(1+P).
//   Pbar = (Fbar - K)^2 (1 + P) / (1 - (A + B Fbar)^2).
inline double scalar_are_P() { return 2.0 + std::sqrt(5.0); }
inline double scalar_are_K() { return -2.0 * scalar_are_P() / (1.0 + scalar_are_P()); }
inline double scalar_are_Pbar() {
  const double kbar = -1.5 - scalar_are_K();
  return kbar * kbar * (1.0 + scalar_are_P()) / (1.0 - 0.25);
}

inline Matrix uniform(std::mt19937_64& rng, int rows, int cols, double lo = -1.0,
                      double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix M(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) M(i, j) = d(rng);
  return M;
}

inline double max_abs(const Matrix& M) { return M.cwiseAbs().maxCoeff(); }

inline double rel_gap(const Matrix& a, const Matrix& b) {
  return max_abs(a - b) / (1.0 + max_abs(b));
}

/// Instance for the stabilization audit: full-rank Q (so (A, C) is
/// observable), a constant Fbar, and rho(A + B Fbar) kept at least `margin`
/// away from 1 so that finite simulations can tell decay from growth.
struct AuditInstance {
  Ensemble ens;
  Matrix fbar;
  InitialCondition ic;
  double rho;
};

inline AuditInstance audit_instance(std::mt19937_64& rng, double margin = 0.05) {
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> scale(0.3, 1.6);
  for (;;) {
    const int n = dim(rng);
    const int m = dim(rng);
    const int v = count(rng);
    EnsembleData d;
    d.A = scale(rng) * uniform(rng, n, n);
    d.B = uniform(rng, n, m);
    const Matrix G = uniform(rng, n, n);
    const Matrix H = uniform(rng, m, m);
    d.Q = G.transpose() * G + 0.1 * Matrix::Identity(n, n);
    d.R = H.transpose() * H + Matrix::Identity(m, m);
    d.mu = uniform(rng, v, 1);
    if (d.mu.squaredNorm() < 1e-2) continue;
    const Matrix fbar = scale(rng) * uniform(rng, m, n);
    const double rho = spectral_radius(d.A + d.B * fbar);
    if (std::abs(rho - 1.0) < margin) continue;
    InitialCondition ic;
    for (int i = 0; i < v; ++i) ic.push_back(uniform(rng, n, 1));
    return AuditInstance{Ensemble::validate(d), fbar, std::move(ic), rho};
  }
}

}  // namespace coordlqr::testing
