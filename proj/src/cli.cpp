#include "coordlqr/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "coordlqr/config.hpp"
#include "coordlqr/verify.hpp"

namespace coordlqr::cli {

namespace {

using json = nlohmann::ordered_json;

struct Options {
  std::string command;
  std::string config_path;
  std::optional<int> horizon;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int instances = 50;
  std::string fault;
};

json to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const std::vector<Matrix>& seq) {
  json out = json::array();
  for (const auto& M : seq) out.push_back(to_json(M));
  return out;
}

json to_json(const StabilityReport& rep) {
  json j;
  j["spectral_radius"] = rep.spectral_radius_closed_loop;
  j["verdict"] = std::string(to_string(rep.verdict));
  j["observable"] = rep.observable;
  j["riccati_converged"] = rep.riccati_converged;
  j["are_solved"] = rep.are_solved;
  j["p_positive_definite"] = rep.p_positive_definite;
  j["p_plus_pbar_positive_definite"] = rep.p_plus_pbar_positive_definite;
  j["consistent"] = rep.consistent;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

bool is_input_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch:
    case ErrorKind::NotSymmetric:
    case ErrorKind::QNotPSD:
    case ErrorKind::RNotPD:
    case ErrorKind::ZeroWeights:
    case ErrorKind::LengthMismatch:
    case ErrorKind::HorizonExceeded:
    case ErrorKind::ProblemTooLarge:
    case ErrorKind::ParseError:
    case ErrorKind::IoError:
      return true;
    default:
      return false;
  }
}

std::string output_dir(const Options& opt, const RunConfig& cfg) {
  if (opt.out_dir) return *opt.out_dir;
  return cfg.outputs.dir;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  return os;
}

void emit(const json& report, const Options& opt, const RunConfig& cfg, std::ostream& out,
          bool always_write = false) {
  const std::string text = report.dump(2) + "\n";
  out << text;
  std::string dir = output_dir(opt, cfg);
  if (dir.empty() && !always_write) return;
  if (dir.empty()) dir = ".";
  auto os = open_output(std::filesystem::path(dir) / cfg.outputs.report);
  os << text;
}

int verdict_exit(const StabilityReport& rep) {
  if (!rep.consistent) return kVerificationFailure;
  return rep.verdict == Verdict::stabilizable ? kSuccess : kNotStabilizable;
}

const Matrix& constant_gain(const RunConfig& cfg) {
  if (!cfg.fbar) {
    throw Error(ErrorKind::ParseError,
                "the infinite-horizon problem needs a constant [policy] Fbar");
  }
  return *cfg.fbar;
}

std::optional<int> horizon_of(const Options& opt, const RunConfig& cfg) {
  if (opt.horizon) return opt.horizon;
  if (cfg.horizon) return cfg.horizon;
  if (cfg.fbar_schedule) return static_cast<int>(cfg.fbar_schedule->size()) - 1;
  return std::nullopt;
}

double eq_cost(const Ensemble& ens, const InitialCondition& ic, const Matrix& P,
               const Matrix& Pbar) {
  double total = 0.0;
  for (const auto& x : ic) total += x.dot(P * x);
  const Vector xbar = weighted_average(ic, ens.mu());
  return total + xbar.dot(Pbar * xbar) / ens.mu_norm_sq();
}

int cmd_report(const Options& opt, const RunConfig& cfg, std::ostream& out) {
  const auto ens = make_ensemble(cfg);
  const auto rep = stability_report(ens, constant_gain(cfg), cfg.tolerances);
  json j;
  j["command"] = "report";
  j["spectral_radius"] = rep.spectral_radius_closed_loop;
  j["verdict"] = std::string(to_string(rep.verdict));
  j["stability"] = to_json(rep);
  emit(j, opt, cfg, out);
  return verdict_exit(rep);
}

int cmd_synthesize(const Options& opt, const RunConfig& cfg, std::ostream& out) {
  const auto ens = make_ensemble(cfg);
  const auto policy = make_policy(cfg);
  const auto horizon = horizon_of(opt, cfg);
  json j;
  j["command"] = "synthesize";
  std::optional<StabilityReport> rep;

  if (horizon) {
    const auto schedule = synthesize_finite(ens, policy, *horizon);
    const auto S = naive_policy_value(ens, policy, *horizon);
    double lyap_gap = 0.0;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const Matrix sum = schedule.P[k] + schedule.Pbar[k];
      lyap_gap = std::max(lyap_gap, (S[k] - sum).cwiseAbs().maxCoeff() /
                                        (1.0 + sum.cwiseAbs().maxCoeff()));
    }
    j["mode"] = "finite";
    j["horizon"] = *horizon;
    j["P"] = to_json(schedule.P);
    j["Pbar"] = to_json(schedule.Pbar);
    j["K"] = to_json(schedule.K);
    j["Kbar"] = to_json(schedule.Kbar);
    if (cfg.initial) j["cost"] = optimal_cost(schedule, *cfg.initial, ens);
    j["residuals"] = {{"riccati_form_gap", schedule.max_form_gap},
                      {"lyapunov_identity_gap", lyap_gap}};
    if (cfg.fbar) rep = stability_report(ens, *cfg.fbar, cfg.tolerances);
  } else {
    rep = stability_report(ens, constant_gain(cfg), cfg.tolerances);
    j["mode"] = "infinite";
    if (rep->solution) {
      const auto& s = *rep->solution;
      j["P"] = to_json(s.P);
      j["Pbar"] = to_json(s.Pbar);
      j["K"] = to_json(s.K);
      j["Kbar"] = to_json(s.Kbar);
      j["average_feedback_gains"] = to_json(average_feedback_gains(ens, s.Kbar));
      if (cfg.initial) {
        check_initial(*cfg.initial, ens);
        j["cost"] = eq_cost(ens, *cfg.initial, s.P, s.Pbar);
      }
      j["residuals"] = {{"are_P", s.residual_P}, {"are_Pbar", s.residual_Pbar}};
    } else {
      j["P"] = rep->P ? to_json(*rep->P) : json(nullptr);
      j["Pbar"] = nullptr;
      j["K"] = rep->P ? to_json(gains(*rep->P, *cfg.fbar, ens).K) : json(nullptr);
      j["Kbar"] = nullptr;
    }
  }
  if (rep) {
    j["spectral_radius"] = rep->spectral_radius_closed_loop;
    j["verdict"] = std::string(to_string(rep->verdict));
    j["stability"] = to_json(*rep);
  }
  emit(j, opt, cfg, out);
  return rep ? verdict_exit(*rep) : kSuccess;
}

int cmd_simulate(const Options& opt, const RunConfig& cfg, std::ostream& out) {
  const auto ens = make_ensemble(cfg);
  const auto policy = make_policy(cfg);
  if (!cfg.initial) throw Error(ErrorKind::ParseError, "simulate needs an [initial] section");
  const auto& ic = *cfg.initial;
  check_initial(ic, ens);
  const auto horizon = horizon_of(opt, cfg);

  json j;
  j["command"] = "simulate";
  Trajectory traj;
  Matrix Kbar_first;
  double closed_form = 0.0;
  if (horizon) {
    const auto schedule = synthesize_finite(ens, policy, *horizon);
    const int steps = opt.steps.value_or(cfg.steps.value_or(*horizon + 1));
    traj = simulate(ens, schedule, policy, ic, steps);
    Kbar_first = schedule.Kbar.front();
    closed_form = optimal_cost(schedule, ic, ens);
    j["mode"] = "finite";
    j["horizon"] = *horizon;
  } else {
    const auto rep = stability_report(ens, constant_gain(cfg), cfg.tolerances);
    if (!rep.solution || rep.verdict != Verdict::stabilizable) {
      j["mode"] = "infinite";
      j["spectral_radius"] = rep.spectral_radius_closed_loop;
      j["verdict"] = std::string(to_string(rep.verdict));
      j["stability"] = to_json(rep);
      emit(j, opt, cfg, out);
      return rep.consistent ? kNotStabilizable : kVerificationFailure;
    }
    const auto& s = *rep.solution;
    const int steps = opt.steps.value_or(cfg.steps.value_or(40));
    traj = simulate(ens, s, policy, ic, steps);
    Kbar_first = s.Kbar;
    closed_form = eq_cost(ens, ic, s.P, s.Pbar);
    j["mode"] = "infinite";
    j["P"] = to_json(s.P);
    j["Pbar"] = to_json(s.Pbar);
    j["K"] = to_json(s.K);
    j["Kbar"] = to_json(s.Kbar);
    j["spectral_radius"] = rep.spectral_radius_closed_loop;
    j["verdict"] = std::string(to_string(rep.verdict));
  }

  std::string dir = output_dir(opt, cfg);
  if (dir.empty()) dir = ".";
  {
    auto os = open_output(std::filesystem::path(dir) / cfg.outputs.trajectory);
    write_trajectory_csv(os, traj);
  }
  {
    auto os = open_output(std::filesystem::path(dir) / cfg.outputs.averages);
    write_averages_csv(os, traj);
  }

  double initial_max = 0.0;
  for (const auto& x : ic) initial_max = std::max(initial_max, x.norm());
  const double total = accumulated_cost(traj);
  const double final_norm = final_max_state_norm(traj);
  j["steps"] = traj.steps;
  j["average_feedback_gains"] = to_json(average_feedback_gains(ens, Kbar_first));
  j["cost"] = total;
  j["closed_form_cost"] = closed_form;
  j["cost_relative_gap"] = std::abs(total - closed_form) / std::max(1.0, std::abs(closed_form));
  j["final_max_state_norm"] = final_norm;
  j["converged"] = final_norm <= 1e-6 * std::max(1.0, initial_max);
  j["residuals"] = {{"constraint", constraint_check(traj, policy)}};
  emit(j, opt, cfg, out, true);
  return kSuccess;
}

json to_json(const VerificationReport& r) {
  return {{"passed", r.passed},
          {"oracle_cost", r.oracle_cost},
          {"distributed_cost", r.distributed_cost},
          {"closed_form_cost", r.closed_form_cost},
          {"cost_gap", r.cost_gap},
          {"closed_form_gap", r.closed_form_gap},
          {"control_gap", r.control_gap},
          {"multiplier_gap", r.multiplier_gap},
          {"constraint_residual", r.constraint_residual},
          {"equilibrium_max", r.residuals.equilibrium_max},
          {"adjoint_max", r.residuals.adjoint_max},
          {"terminal_max", r.residuals.terminal_max}};
}

int cmd_verify(const Options& opt, const RunConfig& cfg, std::ostream& out) {
  const auto ens = make_ensemble(cfg);
  const auto policy = make_policy(cfg);
  const auto horizon = horizon_of(opt, cfg);
  if (!horizon) throw Error(ErrorKind::ParseError, "verify needs a finite horizon");
  if (!cfg.initial) throw Error(ErrorKind::ParseError, "verify needs an [initial] section");

  auto schedule = synthesize_finite(ens, policy, *horizon);
  if (opt.fault == "zero-kbar") {
    for (auto& Kb : schedule.Kbar) Kb.setZero();
  } else if (!opt.fault.empty()) {
    throw Error(ErrorKind::ParseError, "unknown fault '" + opt.fault + "'");
  }
  const auto rep = verify_schedule(ens, policy, schedule, *cfg.initial, {}, cfg.tolerances);

  json j;
  j["command"] = "verify";
  j["horizon"] = *horizon;
  if (!opt.fault.empty()) j["fault"] = opt.fault;
  j["cost"] = {{"oracle", rep.oracle_cost}, {"distributed", rep.distributed_cost}};
  j["residuals"] = to_json(rep);
  bool ok = rep.passed;

  if (opt.seed) {
    const auto runs = run_campaign(*opt.seed, opt.instances);
    int passed = 0;
    VerificationReport worst;
    for (const auto& r : runs) {
      passed += r.passed ? 1 : 0;
      worst.cost_gap = std::max(worst.cost_gap, r.cost_gap);
      worst.closed_form_gap = std::max(worst.closed_form_gap, r.closed_form_gap);
      worst.control_gap = std::max(worst.control_gap, r.control_gap);
      worst.multiplier_gap = std::max(worst.multiplier_gap, r.multiplier_gap);
      worst.constraint_residual = std::max(worst.constraint_residual, r.constraint_residual);
      worst.residuals.equilibrium_max =
          std::max(worst.residuals.equilibrium_max, r.residuals.equilibrium_max);
      worst.residuals.adjoint_max = std::max(worst.residuals.adjoint_max, r.residuals.adjoint_max);
      worst.residuals.terminal_max =
          std::max(worst.residuals.terminal_max, r.residuals.terminal_max);
    }
    json c;
    c["seed"] = *opt.seed;
    c["instances"] = opt.instances;
    c["passed"] = passed;
    c["worst"] = {{"cost_gap", worst.cost_gap},
                  {"closed_form_gap", worst.closed_form_gap},
                  {"control_gap", worst.control_gap},
                  {"multiplier_gap", worst.multiplier_gap},
                  {"constraint_residual", worst.constraint_residual},
                  {"equilibrium_max", worst.residuals.equilibrium_max},
                  {"adjoint_max", worst.residuals.adjoint_max},
                  {"terminal_max", worst.residuals.terminal_max}};
    j["campaign"] = std::move(c);
    ok = ok && passed == opt.instances;
  }
  j["passed"] = ok;
  emit(j, opt, cfg, out);
  return ok ? kSuccess : kVerificationFailure;
}

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t c = 0; c < cells.size(); ++c) os << (c ? "," : "") << cells[c];
  os << '\n';
}

void append(std::vector<std::string>& cells, const Vector& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) cells.push_back(format_number(x(i)));
}

void append_blank(std::vector<std::string>& cells, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) cells.emplace_back();
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const Eigen::Index n = traj.states.empty() || traj.states[0].empty()
                             ? 0 : traj.states[0][0].size();
  const Eigen::Index m = traj.controls.empty() || traj.controls[0].empty()
                             ? 0 : traj.controls[0][0].size();
  std::vector<std::string> header{"step", "subsystem"};
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("x_" + std::to_string(i));
  for (Eigen::Index i = 0; i < m; ++i) header.push_back("u_" + std::to_string(i));
  write_row(os, header);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    for (std::size_t i = 0; i < traj.states[k].size(); ++i) {
      std::vector<std::string> cells{std::to_string(k), std::to_string(i)};
      append(cells, traj.states[k][i]);
      if (k < traj.controls.size()) {
        append(cells, traj.controls[k][i]);
      } else {
        append_blank(cells, m);
      }
      write_row(os, cells);
    }
  }
}

void write_averages_csv(std::ostream& os, const Trajectory& traj) {
  const Eigen::Index n = traj.avg_state.empty() ? 0 : traj.avg_state[0].size();
  const Eigen::Index m = traj.avg_control.empty() ? 0 : traj.avg_control[0].size();
  std::vector<std::string> header{"step"};
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("xbar_" + std::to_string(i));
  for (Eigen::Index i = 0; i < m; ++i) header.push_back("ubar_" + std::to_string(i));
  header.emplace_back("stage_cost");
  header.emplace_back("constraint_residual");
  write_row(os, header);
  for (std::size_t k = 0; k < traj.avg_state.size(); ++k) {
    std::vector<std::string> cells{std::to_string(k)};
    append(cells, traj.avg_state[k]);
    if (k < traj.avg_control.size()) {
      append(cells, traj.avg_control[k]);
      cells.push_back(format_number(traj.stage_costs[k]));
      cells.push_back(format_number(traj.constraint_residuals[k]));
    } else {
      append_blank(cells, m + 2);
    }
    write_row(os, cells);
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed LQ synthesis and verification for coordinated ensembles",
               "coordlqr"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Run configuration (TOML)")->required();
    sub->add_option("--horizon", opt.horizon, "Finite horizon N (overrides config)");
    sub->add_option("--out", opt.out_dir, "Output directory (overrides [outputs] dir)");
  };
  auto* synth = app.add_subcommand("synthesize", "Optimal gains and stability report");
  add_common(synth);
  auto* sim = app.add_subcommand("simulate", "Closed-loop simulation with CSV output");
  add_common(sim);
  sim->add_option("--steps", opt.steps, "Number of simulated steps");
  auto* ver = app.add_subcommand("verify", "KKT oracle and maximum-principle checks");
  add_common(ver);
  ver->add_option("--seed", opt.seed, "Also run a randomized campaign with this seed");
  ver->add_option("--instances", opt.instances, "Campaign size")->check(CLI::PositiveNumber);
  ver->add_option("--inject-fault", opt.fault, "Corrupt the synthesized gains (zero-kbar)");
  auto* rep = app.add_subcommand("report", "Stability report only");
  add_common(rep);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    const RunConfig cfg = load_config(opt.config_path);
    if (synth->parsed()) return cmd_synthesize(opt, cfg, out);
    if (sim->parsed()) return cmd_simulate(opt, cfg, out);
    if (ver->parsed()) return cmd_verify(opt, cfg, out);
    return cmd_report(opt, cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_input_error(e.kind()) ? kInputError : kVerificationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace coordlqr::cli
