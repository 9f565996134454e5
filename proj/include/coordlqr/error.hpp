#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coordlqr {

enum class ErrorKind {
  DimensionMismatch,
  NotSymmetric,
  QNotPSD,
  RNotPD,
  ZeroWeights,
  LengthMismatch,
  InnerMatrixSingular,
  NoConvergence,
  NotPositiveDefinite,
  ClosedLoopUnstable,
  HorizonExceeded,
  SingularKKT,
  ProblemTooLarge,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as this exception. what() is prefixed with the
// kind name so that command-line messages carry it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace coordlqr
