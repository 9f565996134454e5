#pragma once

#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "coordlqr/error.hpp"

namespace coordlqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical tolerances shared by every module. Defaults are relative unless
/// noted.
struct Tolerances {
  double psd = 1e-9;   // PSD/PD tests, scaled by 1 + max |eigenvalue|
  double alg = 1e-9;   // algebraic identities between two routes
  double are = 1e-10;  // fixed-point convergence of the AREs
  double kkt = 1e-8;   // KKT residual, relative to the assembled matrix norm
  double rank = 1e-10; // singular-value cutoff, relative to the largest
  double eig = 1e-10;  // eigenvalue accuracy
  int max_iter = 10000;
};

/// Raw, unvalidated problem data as read from a config or a caller.
struct EnsembleData {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  Vector mu;
};

/// A validated ensemble of v identical subsystems x_{k+1} = A x_k + B u_k with
/// stage weights Q (PSD) and R (PD), coupled only through the mu-weighted
/// average. Immutable once constructed.
class Ensemble {
 public:
  /// Checks dimensions, symmetry, Q >= 0, R > 0 and sum(mu^2) > 0. Slightly
  /// asymmetric weights (within tol_psd) are symmetrized; anything worse is
  /// rejected.
  static Ensemble validate(const EnsembleData& raw, double tol_psd = 1e-9);

  const Matrix& A() const { return data_.A; }
  const Matrix& B() const { return data_.B; }
  const Matrix& Q() const { return data_.Q; }
  const Matrix& R() const { return data_.R; }
  const Vector& mu() const { return data_.mu; }
  const EnsembleData& data() const { return data_; }

  int count() const { return static_cast<int>(data_.mu.size()); }
  int states() const { return static_cast<int>(data_.A.rows()); }
  int inputs() const { return static_cast<int>(data_.B.cols()); }

  /// sum_i mu_i^2, the normalizer of the average-feedback term.
  double mu_norm_sq() const { return mu_norm_sq_; }

  /// mu_i / sum_j mu_j^2
  double share(int i) const { return data_.mu(i) / mu_norm_sq_; }

 private:
  explicit Ensemble(EnsembleData data);

  EnsembleData data_;
  double mu_norm_sq_ = 0.0;
};

/// The imposed average-behavior law ubar_k = Fbar_k xbar_k. Either one gain
/// for every step (infinite horizon, or a constant finite schedule) or an
/// explicit per-step schedule Fbar_0..Fbar_N.
class ConstraintPolicy {
 public:
  static ConstraintPolicy constant(Matrix gain);
  static ConstraintPolicy schedule(std::vector<Matrix> gains);

  bool is_constant() const { return std::holds_alternative<Matrix>(gains_); }

  /// Gain at step k. A schedule throws HorizonExceeded beyond its last entry.
  const Matrix& gain(int k) const;

  /// Number of schedule entries, or -1 for a constant policy.
  int length() const;

  /// Throws DimensionMismatch unless every gain is m x n, and
  /// HorizonExceeded unless a schedule covers steps 0..horizon.
  void check(const Ensemble& ens, int horizon) const;

 private:
  explicit ConstraintPolicy(std::variant<Matrix, std::vector<Matrix>> gains)
      : gains_(std::move(gains)) {}

  std::variant<Matrix, std::vector<Matrix>> gains_;
};

/// Per-subsystem initial states xi^i.
using InitialCondition = std::vector<Vector>;

/// Throws DimensionMismatch unless there are exactly v vectors of length n.
void check_initial(const InitialCondition& ic, const Ensemble& ens);

/// sum_i mu_i vectors[i]
Vector weighted_average(std::span<const Vector> vectors, const Vector& mu);

// Symmetric-matrix helpers used across modules.
Matrix symmetrize(const Matrix& M);
double min_eigenvalue(const Matrix& symmetric);
double max_abs_eigenvalue(const Matrix& symmetric);
/// Smallest eigenvalue >= -tol * (1 + max |eigenvalue|).
bool is_psd(const Matrix& symmetric, double tol);
/// Smallest eigenvalue > tol * (1 + max |eigenvalue|).
bool is_pd(const Matrix& symmetric, double tol);

}  // namespace coordlqr
