#pragma once

#include <vector>

#include "coordlqr/model.hpp"

namespace coordlqr {

struct RiccatiStep {
  Matrix P;  // Q + A'P+A - A'P+B (R + B'P+B)^{-1} B'P+A
  Matrix K;  // -(R + B'P+B)^{-1} B'P+A
  /// Max-abs gap between the above and the closed-loop form
  /// Q + K'RK + (A+BK)'P+(A+BK), relative to 1 + |P|.
  double form_gap = 0.0;
};

/// One backward step of the Riccati difference equation from P_next = P_{k+1}.
/// The inner matrix R + B'P_next B is Cholesky-factored; failure throws
/// InnerMatrixSingular.
RiccatiStep riccati_step(const Matrix& P_next, const Ensemble& ens);

/// One backward step of the coordination recursion:
///   Pbar = (A+BF)'Pbar_next(A+BF) + F'(R+B'P_next B)F
///        + A'P_next B (R+B'P_next B)^{-1} B'P_next A + A'P_next B F + F'B'P_next A
Matrix pbar_step(const Matrix& Pbar_next, const Matrix& P_next,
                 const Matrix& Fbar, const Ensemble& ens);

/// Time-indexed output of the finite-horizon synthesis. P and Pbar are indexed
/// 0..N+1 (the last entry is the zero terminal condition); K, Kbar and Fbar are
/// indexed 0..N.
struct GainSchedule {
  int horizon = 0;
  std::vector<Matrix> P;
  std::vector<Matrix> Pbar;
  std::vector<Matrix> K;
  std::vector<Matrix> Kbar;
  std::vector<Matrix> Fbar;
  /// Largest form_gap seen across all Riccati steps.
  double max_form_gap = 0.0;
};

/// Backward synthesis of the optimal distributed gains for horizon N:
/// u_k^i = K_k x_k^i + (mu_i / sum mu^2) Kbar_k xbar_k with Kbar_k = Fbar_k - K_k.
GainSchedule synthesize_finite(const Ensemble& ens, const ConstraintPolicy& policy,
                               int horizon);

/// sum_i x0^i' P_0 x0^i + (1/sum mu^2) xbar0' Pbar_0 xbar0
double optimal_cost(const GainSchedule& schedule, const InitialCondition& ic,
                    const Ensemble& ens);

/// The coordination term (1/sum mu^2) xbar0' Pbar_0 xbar0 alone.
double coordination_cost(const GainSchedule& schedule, const InitialCondition& ic,
                         const Ensemble& ens);

/// Value matrices S_0..S_{N+1} of the naive policy u_k^i = Fbar_k x_k^i:
/// S_k = Q + Fbar_k'R Fbar_k + (A+B Fbar_k)'S_{k+1}(A+B Fbar_k), S_{N+1} = 0.
std::vector<Matrix> naive_policy_value(const Ensemble& ens,
                                       const ConstraintPolicy& policy, int horizon);

}  // namespace coordlqr
