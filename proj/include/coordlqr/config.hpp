#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coordlqr/model.hpp"

namespace coordlqr {

struct OutputPaths {
  std::string dir;
  std::string trajectory = "trajectory.csv";
  std::string averages = "averages.csv";
  std::string report = "report.json";
};

/// Parsed contents of a run configuration file:
///
///   [ensemble]   A, B, Q, R (nested arrays, row-major; a bare number is 1x1),
///                mu (array), v (optional, must equal len(mu))
///   [policy]     Fbar (one gain) or Fbar_schedule (array of gains),
///                horizon (optional N), steps (optional)
///   [initial]    x0 (array of state vectors; a bare number is a 1-vector)
///   [tolerances] tol_psd, tol_alg, tol_are, tol_kkt, tol_rank, tol_eig, max_iter
///   [outputs]    dir, trajectory, averages, report
struct RunConfig {
  EnsembleData ensemble;
  std::optional<Matrix> fbar;
  std::optional<std::vector<Matrix>> fbar_schedule;
  std::optional<int> horizon;
  std::optional<int> steps;
  std::optional<InitialCondition> initial;
  Tolerances tolerances;
  OutputPaths outputs;
};

/// Parses configuration text. Errors are ParseError with a
/// "source:line:column" prefix.
RunConfig parse_config(std::string_view text, std::string_view source = "<config>");

/// Reads and parses a file; IoError if it cannot be read.
RunConfig load_config(const std::string& path);

/// Emits a configuration that parse_config reads back to the same values.
/// Numbers are printed with 17 significant digits.
std::string write_config(const RunConfig& config);

/// Validated ensemble from the [ensemble] section.
Ensemble make_ensemble(const RunConfig& config);

/// Constraint policy from [policy]; ParseError if neither gain form is given.
ConstraintPolicy make_policy(const RunConfig& config);

/// "%.17g" with '.' as decimal separator.
std::string format_number(double value);

}  // namespace coordlqr
