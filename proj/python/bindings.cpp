#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coordlqr/verify.hpp"

namespace py = pybind11;
using namespace coordlqr;

namespace {

// A single matrix is a constant policy; a list of matrices is a schedule.
ConstraintPolicy to_policy(const py::object& obj) {
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    return ConstraintPolicy::schedule(obj.cast<std::vector<Matrix>>());
  }
  return ConstraintPolicy::constant(obj.cast<Matrix>());
}

Tolerances tolerances(double tol_are, int max_iter) {
  Tolerances t;
  t.are = tol_are;
  t.max_iter = max_iter;
  return t;
}

}  // namespace

PYBIND11_MODULE(_coordlqr, m) {
  m.doc() = "Distributed LQ synthesis for ensembles coupled through a weighted average";

  static py::exception<Error> coord_error(m, "CoordError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(coord_error, e.what());
    }
  });

  py::class_<Ensemble>(m, "Ensemble")
      .def(py::init([](Matrix A, Matrix B, Matrix Q, Matrix R, Vector mu, double tol_psd) {
             return Ensemble::validate({std::move(A), std::move(B), std::move(Q),
                                        std::move(R), std::move(mu)},
                                       tol_psd);
           }),
           py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), py::arg("mu"),
           py::arg("tol_psd") = 1e-9)
      .def_property_readonly("A", &Ensemble::A)
      .def_property_readonly("B", &Ensemble::B)
      .def_property_readonly("Q", &Ensemble::Q)
      .def_property_readonly("R", &Ensemble::R)
      .def_property_readonly("mu", &Ensemble::mu)
      .def_property_readonly("v", &Ensemble::count)
      .def_property_readonly("n", &Ensemble::states)
      .def_property_readonly("m", &Ensemble::inputs)
      .def_property_readonly("mu_norm_sq", &Ensemble::mu_norm_sq);

  py::class_<GainSchedule>(m, "GainSchedule")
      .def_readonly("horizon", &GainSchedule::horizon)
      .def_readonly("P", &GainSchedule::P)
      .def_readonly("Pbar", &GainSchedule::Pbar)
      .def_readonly("K", &GainSchedule::K)
      .def_readonly("Kbar", &GainSchedule::Kbar)
      .def_readonly("Fbar", &GainSchedule::Fbar);

  py::class_<SteadySolution>(m, "SteadySolution")
      .def_readonly("P", &SteadySolution::P)
      .def_readonly("Pbar", &SteadySolution::Pbar)
      .def_readonly("K", &SteadySolution::K)
      .def_readonly("Kbar", &SteadySolution::Kbar)
      .def_readonly("Fbar", &SteadySolution::Fbar)
      .def_readonly("iterations", &SteadySolution::iterations)
      .def_readonly("residual_P", &SteadySolution::residual_P)
      .def_readonly("residual_Pbar", &SteadySolution::residual_Pbar);

  py::class_<StabilityReport>(m, "StabilityReport")
      .def_readonly("spectral_radius_closed_loop", &StabilityReport::spectral_radius_closed_loop)
      .def_readonly("observable", &StabilityReport::observable)
      .def_readonly("riccati_converged", &StabilityReport::riccati_converged)
      .def_readonly("are_solved", &StabilityReport::are_solved)
      .def_readonly("p_positive_definite", &StabilityReport::p_positive_definite)
      .def_readonly("p_plus_pbar_positive_definite",
                    &StabilityReport::p_plus_pbar_positive_definite)
      .def_property_readonly("verdict",
                             [](const StabilityReport& r) { return std::string(to_string(r.verdict)); })
      .def_readonly("consistent", &StabilityReport::consistent)
      .def_readonly("note", &StabilityReport::note)
      .def_readonly("solution", &StabilityReport::solution);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("steps", &Trajectory::steps)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("controls", &Trajectory::controls)
      .def_readonly("avg_state", &Trajectory::avg_state)
      .def_readonly("avg_control", &Trajectory::avg_control)
      .def_readonly("stage_costs", &Trajectory::stage_costs)
      .def_readonly("constraint_residuals", &Trajectory::constraint_residuals);

  py::class_<OracleSolution>(m, "OracleSolution")
      .def_readonly("controls", &OracleSolution::controls)
      .def_readonly("cost", &OracleSolution::cost)
      .def_readonly("kkt_residual", &OracleSolution::kkt_residual)
      .def_readonly("multipliers", &OracleSolution::multipliers);

  m.def("weighted_average",
        [](const std::vector<Vector>& vectors, const Vector& mu) {
          return weighted_average(vectors, mu);
        },
        py::arg("vectors"), py::arg("mu"));

  m.def("riccati_step",
        [](const Matrix& P_next, const Ensemble& ens) {
          auto s = riccati_step(P_next, ens);
          return py::make_tuple(s.P, s.K);
        },
        py::arg("P_next"), py::arg("ens"), "Returns (P, K).");
  m.def("pbar_step", &pbar_step, py::arg("Pbar_next"), py::arg("P_next"), py::arg("Fbar"),
        py::arg("ens"));
  m.def("synthesize_finite",
        [](const Ensemble& ens, const py::object& policy, int horizon) {
          return synthesize_finite(ens, to_policy(policy), horizon);
        },
        py::arg("ens"), py::arg("policy"), py::arg("horizon"));
  m.def("optimal_cost", &optimal_cost, py::arg("schedule"), py::arg("ic"), py::arg("ens"));
  m.def("naive_policy_value",
        [](const Ensemble& ens, const py::object& policy, int horizon) {
          return naive_policy_value(ens, to_policy(policy), horizon);
        },
        py::arg("ens"), py::arg("policy"), py::arg("horizon"));

  m.def("solve_are",
        [](const Ensemble& ens, double tol_are, int max_iter) {
          return solve_are(ens, tolerances(tol_are, max_iter)).P;
        },
        py::arg("ens"), py::arg("tol_are") = 1e-10, py::arg("max_iter") = 10000);
  m.def("solve_pbar",
        [](const Matrix& P, const Matrix& Fbar, const Ensemble& ens, double tol_are) {
          return solve_pbar(P, Fbar, ens, tolerances(tol_are, 10000));
        },
        py::arg("P"), py::arg("Fbar"), py::arg("ens"), py::arg("tol_are") = 1e-10);
  m.def("solve_steady",
        [](const Ensemble& ens, const Matrix& Fbar) { return solve_steady(ens, Fbar); },
        py::arg("ens"), py::arg("Fbar"));
  m.def("gains",
        [](const Matrix& P, const Matrix& Fbar, const Ensemble& ens) {
          auto g = gains(P, Fbar, ens);
          return py::make_tuple(g.K, g.Kbar);
        },
        py::arg("P"), py::arg("Fbar"), py::arg("ens"), "Returns (K, Kbar).");
  m.def("sqrt_factor", &sqrt_factor, py::arg("Q"), py::arg("tol_psd") = 1e-9);
  m.def("observability", &observability, py::arg("A"), py::arg("C"),
        py::arg("tol_rank") = 1e-10);
  m.def("spectral_radius", &spectral_radius, py::arg("M"));
  m.def("stability_report",
        [](const Ensemble& ens, const Matrix& Fbar) { return stability_report(ens, Fbar); },
        py::arg("ens"), py::arg("Fbar"));

  m.def("simulate",
        [](const Ensemble& ens, const py::object& gains_obj, const py::object& policy,
           const InitialCondition& ic, int steps) {
          if (py::isinstance<GainSchedule>(gains_obj)) {
            return simulate(ens, gains_obj.cast<const GainSchedule&>(), to_policy(policy), ic,
                            steps);
          }
          return simulate(ens, gains_obj.cast<const SteadySolution&>(), to_policy(policy), ic,
                          steps);
        },
        py::arg("ens"), py::arg("gains"), py::arg("policy"), py::arg("ic"), py::arg("steps"));
  m.def("accumulated_cost", &accumulated_cost, py::arg("traj"));
  m.def("constraint_check",
        [](const Trajectory& traj, const py::object& policy) {
          return constraint_check(traj, to_policy(policy));
        },
        py::arg("traj"), py::arg("policy"));
  m.def("average_feedback_gains", &average_feedback_gains, py::arg("ens"), py::arg("Kbar"));

  m.def("centralized_oracle",
        [](const Ensemble& ens, const py::object& policy, int horizon,
           const InitialCondition& ic) {
          return centralized_oracle(ens, to_policy(policy), horizon, ic);
        },
        py::arg("ens"), py::arg("policy"), py::arg("horizon"), py::arg("ic"));
  m.def("costates_closed_form",
        [](const Trajectory& traj, const GainSchedule& schedule, const Ensemble& ens) {
          auto t = costates_closed_form(traj, schedule, ens);
          return py::make_tuple(t.p, t.p_extra);
        },
        py::arg("traj"), py::arg("schedule"), py::arg("ens"), "Returns (p, p_extra).");
  m.def("mp_residuals",
        [](const Trajectory& traj, const GainSchedule& schedule, const Ensemble& ens) {
          const auto trace = costates_closed_form(traj, schedule, ens);
          const auto r = mp_residuals(traj, trace, ens,
                                      ConstraintPolicy::schedule(schedule.Fbar));
          return py::make_tuple(r.equilibrium_max, r.adjoint_max);
        },
        py::arg("traj"), py::arg("schedule"), py::arg("ens"),
        "Returns (equilibrium_max, adjoint_max) for the closed-form costates.");
}
