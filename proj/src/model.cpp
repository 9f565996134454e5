#include "coordlqr/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coordlqr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::QNotPSD: return "QNotPSD";
    case ErrorKind::RNotPD: return "RNotPD";
    case ErrorKind::ZeroWeights: return "ZeroWeights";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InnerMatrixSingular: return "InnerMatrixSingular";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::ClosedLoopUnstable: return "ClosedLoopUnstable";
    case ErrorKind::HorizonExceeded: return "HorizonExceeded";
    case ErrorKind::SingularKKT: return "SingularKKT";
    case ErrorKind::ProblemTooLarge: return "ProblemTooLarge";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string shape(const Matrix& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

void expect_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols,
                  const char* name) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream os;
    os << name << " is " << shape(M) << ", expected " << rows << "x" << cols;
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

// Symmetrizes M if its asymmetry is within tolerance, otherwise throws.
Matrix checked_symmetric(const Matrix& M, double tol, const char* name) {
  const double scale = 1.0 + M.cwiseAbs().maxCoeff();
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= tol * scale)) {
    std::ostringstream os;
    os << name << " asymmetry " << asym << " exceeds tolerance";
    throw Error(ErrorKind::NotSymmetric, os.str());
  }
  return symmetrize(M);
}

}  // namespace

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_abs_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_psd(const Matrix& symmetric, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return ev.minCoeff() >= -tol * (1.0 + ev.cwiseAbs().maxCoeff());
}

bool is_pd(const Matrix& symmetric, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return ev.minCoeff() > tol * (1.0 + ev.cwiseAbs().maxCoeff());
}

Ensemble::Ensemble(EnsembleData data)
    : data_(std::move(data)), mu_norm_sq_(data_.mu.squaredNorm()) {}

Ensemble Ensemble::validate(const EnsembleData& raw, double tol_psd) {
  const Eigen::Index n = raw.A.rows();
  const Eigen::Index m = raw.B.cols();
  if (n == 0 || m == 0) {
    throw Error(ErrorKind::DimensionMismatch, "empty state or input dimension");
  }
  expect_shape(raw.A, n, n, "A");
  expect_shape(raw.B, n, m, "B");
  expect_shape(raw.Q, n, n, "Q");
  expect_shape(raw.R, m, m, "R");
  if (raw.mu.size() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "no subsystems (mu is empty)");
  }
  if (!raw.A.allFinite() || !raw.B.allFinite() || !raw.Q.allFinite() ||
      !raw.R.allFinite() || !raw.mu.allFinite()) {
    throw Error(ErrorKind::DimensionMismatch, "non-finite entry in problem data");
  }

  EnsembleData out = raw;
  out.Q = checked_symmetric(raw.Q, tol_psd, "Q");
  out.R = checked_symmetric(raw.R, tol_psd, "R");

  if (!is_psd(out.Q, tol_psd)) {
    std::ostringstream os;
    os << "smallest eigenvalue of Q is " << min_eigenvalue(out.Q);
    throw Error(ErrorKind::QNotPSD, os.str());
  }
  if (!is_pd(out.R, tol_psd)) {
    std::ostringstream os;
    os << "smallest eigenvalue of R is " << min_eigenvalue(out.R);
    throw Error(ErrorKind::RNotPD, os.str());
  }
  if (!(raw.mu.squaredNorm() > 0.0)) {
    throw Error(ErrorKind::ZeroWeights, "sum of squared weights is zero");
  }
  return Ensemble(std::move(out));
}

ConstraintPolicy ConstraintPolicy::constant(Matrix gain) {
  return ConstraintPolicy(std::move(gain));
}

ConstraintPolicy ConstraintPolicy::schedule(std::vector<Matrix> gains) {
  if (gains.empty()) {
    throw Error(ErrorKind::LengthMismatch, "empty constraint schedule");
  }
  return ConstraintPolicy(std::move(gains));
}

const Matrix& ConstraintPolicy::gain(int k) const {
  if (const auto* g = std::get_if<Matrix>(&gains_)) return *g;
  const auto& seq = std::get<std::vector<Matrix>>(gains_);
  if (k < 0 || k >= static_cast<int>(seq.size())) {
    std::ostringstream os;
    os << "constraint gain requested at step " << k << " but schedule has "
       << seq.size() << " entries";
    throw Error(ErrorKind::HorizonExceeded, os.str());
  }
  return seq[static_cast<std::size_t>(k)];
}

int ConstraintPolicy::length() const {
  if (is_constant()) return -1;
  return static_cast<int>(std::get<std::vector<Matrix>>(gains_).size());
}

void ConstraintPolicy::check(const Ensemble& ens, int horizon) const {
  if (is_constant()) {
    expect_shape(std::get<Matrix>(gains_), ens.inputs(), ens.states(), "Fbar");
    return;
  }
  const auto& seq = std::get<std::vector<Matrix>>(gains_);
  for (const auto& g : seq) expect_shape(g, ens.inputs(), ens.states(), "Fbar_k");
  if (horizon >= 0 && static_cast<int>(seq.size()) != horizon + 1) {
    std::ostringstream os;
    os << "schedule has " << seq.size() << " gains, horizon " << horizon
       << " needs " << horizon + 1;
    throw Error(ErrorKind::HorizonExceeded, os.str());
  }
}

void check_initial(const InitialCondition& ic, const Ensemble& ens) {
  if (static_cast<int>(ic.size()) != ens.count()) {
    std::ostringstream os;
    os << ic.size() << " initial states for " << ens.count() << " subsystems";
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
  for (const auto& x : ic) {
    if (x.size() != ens.states()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "initial state length differs from state dimension");
    }
  }
}

Vector weighted_average(std::span<const Vector> vectors, const Vector& mu) {
  if (static_cast<Eigen::Index>(vectors.size()) != mu.size()) {
    throw Error(ErrorKind::LengthMismatch, "weights and vectors differ in count");
  }
  if (vectors.empty()) return Vector();
  Vector out = Vector::Zero(vectors.front().size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != out.size()) {
      throw Error(ErrorKind::LengthMismatch, "vectors differ in length");
    }
    out.noalias() += mu(static_cast<Eigen::Index>(i)) * vectors[i];
  }
  return out;
}

}  // namespace coordlqr
