// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "support.hpp"

using namespace coordlqr;
using coordlqr::testing::max_abs;
using coordlqr::testing::rel_gap;
using coordlqr::testing::scalar;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<RandomInstance> property_instances() {
  std::mt19937_64 rng(20240611);
  std::vector<RandomInstance> out;
  for (int i = 0; i < 50; ++i) out.push_back(random_instance(rng));
  return out;
}

double steady_cost(const Ensemble& ens, const InitialCondition& ic, const SteadySolution& s) {
  double total = 0.0;
  for (const auto& x : ic) total += x.dot(s.P * x);
  const Vector xbar = weighted_average(ic, ens.mu());
  return total + xbar.dot(s.Pbar * xbar) / ens.mu_norm_sq();
}

Outcome regression() {
  const auto ens = testing::five_subsystems();
  const auto s = solve_steady(ens, scalar(-1.5));
  const auto g = average_feedback_gains(ens, s.Kbar);
  double worst = 0.0;
  worst = std::max(worst, std::abs(s.P(0, 0) - 4.2361));
  worst = std::max(worst, std::abs(s.Pbar(0, 0) - 0.0972));
  worst = std::max(worst, std::abs(s.K(0, 0) + 1.6180));
  worst = std::max(worst, std::abs(s.Kbar(0, 0) - 0.1180));
  const double expected[] = {0.0908, 0.0605, 0.0908, 0.0303, 0.1210};
  for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(g[i](0, 0) - expected[i]));
  return {worst <= 5e-4, fmt("max abs deviation %.2e", worst)};
}

Outcome convergence() {
  const auto ens = testing::five_subsystems();
  const auto s = solve_steady(ens, scalar(-1.5));
  const auto traj = simulate(ens, s, ConstraintPolicy::constant(scalar(-1.5)),
                             testing::five_subsystems_ic(), 40);
  const double final_norm = final_max_state_norm(traj);
  return {final_norm < 1e-6, fmt("max_i |x_40^i| = %.2e", final_norm)};
}

Outcome oracle_equivalence(const std::vector<RandomInstance>& cases) {
  double cost = 0.0, control = 0.0;
  for (const auto& c : cases) {
    const auto r = verify_instance(c.ens, c.policy, c.horizon, c.ic);
    cost = std::max(cost, r.cost_gap);
    control = std::max(control, r.control_gap);
  }
  return {cost <= 1e-7 && control <= 1e-6,
          fmt("worst cost gap %.2e", cost) + fmt(", worst control gap %.2e", control)};
}

Outcome maximum_principle(const std::vector<RandomInstance>& cases) {
  double eq = 0.0, adj = 0.0, term = 0.0;
  for (const auto& c : cases) {
    const auto sched = synthesize_finite(c.ens, c.policy, c.horizon);
    const auto traj = simulate(c.ens, sched, c.policy, c.ic, c.horizon + 1);
    const auto r = mp_residuals(traj, costates_closed_form(traj, sched, c.ens), c.ens, c.policy);
    eq = std::max(eq, r.equilibrium_max);
    adj = std::max(adj, r.adjoint_max);
    term = std::max(term, r.terminal_max);
  }
  return {eq <= 1e-8 && adj <= 1e-8 && term == 0.0,
          fmt("equilibrium %.2e", eq) + fmt(", adjoint %.2e", adj) + fmt(", |p_N| %.1e", term)};
}

Outcome lyapunov_identity(const std::vector<RandomInstance>& cases) {
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto sched = synthesize_finite(c.ens, c.policy, c.horizon);
    const auto S = naive_policy_value(c.ens, c.policy, c.horizon);
    for (std::size_t k = 0; k < S.size(); ++k)
      worst = std::max(worst, rel_gap(sched.P[k] + sched.Pbar[k], S[k]));
  }
  return {worst <= 1e-9, fmt("worst relative gap %.2e", worst)};
}

bool decays(const Ensemble& ens, const Matrix& fbar, const Matrix& K, const InitialCondition& ic) {
  SteadySolution law;
  law.K = K;
  law.Kbar = fbar - K;
  law.Fbar = fbar;
  const auto traj = simulate(ens, law, ConstraintPolicy::constant(fbar), ic, 2000);
  double start = 0.0;
  for (const auto& x : ic) start = std::max(start, x.norm());
  const double final_norm = final_max_state_norm(traj);
  return final_norm <= 1e-6 * start;  // false for inf and nan
}

Outcome audit() {
  std::mt19937_64 rng(777);
  int agree = 0, stabilizable = 0, unobservable = 0;
  std::string first_bad;
  for (int t = 0; t < 50; ++t) {
    const auto inst = testing::audit_instance(rng);
    const auto& ens = inst.ens;
    if (!observability(ens.A(), sqrt_factor(ens.Q()))) ++unobservable;

    const bool by_rho = spectral_radius(ens.A() + ens.B() * inst.fbar) < 1.0;
    const auto lim = coupled_value_iteration(ens, inst.fbar);
    const bool by_are = lim.converged && is_pd(lim.P, 1e-9) && is_pd(lim.P + lim.Pbar, 1e-9);
    Matrix K = Matrix::Zero(ens.inputs(), ens.states());
    try {
      K = gains(solve_are(ens).P, inst.fbar, ens).K;
    } catch (const Error&) {
    }
    const bool by_sim = decays(ens, inst.fbar, K, inst.ic);

    stabilizable += by_rho ? 1 : 0;
    if (by_rho == by_are && by_are == by_sim) {
      ++agree;
    } else if (first_bad.empty()) {
      first_bad = " first disagreement at instance " + std::to_string(t) +
                  fmt(" (rho %.4f)", inst.rho);
    }
  }
  std::string d = std::to_string(agree) + "/50 agree, " + std::to_string(stabilizable) +
                  " stabilizable";
  if (unobservable) d += ", " + std::to_string(unobservable) + " unobservable";
  return {agree == 50 && unobservable == 0, d + first_bad};
}

Outcome structural(const std::vector<RandomInstance>& cases) {
  double pbar_min = 0.0, mono = 0.0, constraint = 0.0, kbar = 0.0, coord = 0.0;
  for (const auto& c : cases) {
    const auto sched = synthesize_finite(c.ens, c.policy, c.horizon);
    pbar_min = std::min(pbar_min, min_eigenvalue(sched.Pbar[0]) / (1.0 + max_abs(sched.Pbar[0])));

    const auto constant = ConstraintPolicy::constant(c.policy.gain(0));
    Matrix prev;
    for (int N = 0; N <= c.horizon; ++N) {
      const Matrix P0 = synthesize_finite(c.ens, constant, N).P[0];
      if (N > 0) mono = std::min(mono, min_eigenvalue(P0 - prev) / (1.0 + max_abs(P0)));
      prev = P0;
    }

    const auto traj = simulate(c.ens, sched, c.policy, c.ic, c.horizon + 1);
    constraint = std::max(constraint, constraint_check(traj, c.policy));

    const auto matched =
        synthesize_finite(c.ens, ConstraintPolicy::schedule(sched.K), c.horizon);
    for (const auto& Kb : matched.Kbar) kbar = std::max(kbar, max_abs(Kb));
    coord = std::max(coord, std::abs(coordination_cost(matched, c.ic, c.ens)));
  }
  const auto ens = testing::five_subsystems();
  const auto policy = ConstraintPolicy::constant(scalar(-1.5));
  const auto traj =
      simulate(ens, solve_steady(ens, scalar(-1.5)), policy, testing::five_subsystems_ic(), 40);
  constraint = std::max(constraint, constraint_check(traj, policy));

  const bool ok = pbar_min >= -1e-9 && mono >= -1e-9 && constraint <= 1e-9 && kbar <= 1e-9 &&
                  coord <= 1e-9;
  return {ok, fmt("min eig Pbar0 %.1e", pbar_min) + fmt(", monotone slack %.1e", mono) +
                  fmt(", constraint %.1e", constraint) + fmt(", Kbar %.1e", kbar) +
                  fmt(", coordination cost %.1e", coord)};
}

Outcome infinite_cost() {
  double worst = 0.0;
  const auto check = [&](const Ensemble& ens, const Matrix& fbar, const InitialCondition& ic) {
    const auto s = solve_steady(ens, fbar);
    const auto traj = simulate(ens, s, ConstraintPolicy::constant(fbar), ic, 3000);
    const double closed = steady_cost(ens, ic, s);
    worst = std::max(worst, std::abs(accumulated_cost(traj) - closed) / std::abs(closed));
  };
  check(testing::five_subsystems(), scalar(-1.5), testing::five_subsystems_ic());

  std::mt19937_64 rng(4242);
  int used = 0;
  while (used < 5) {
    const auto inst = testing::audit_instance(rng);
    if (inst.rho >= 1.0) continue;
    check(inst.ens, inst.fbar, inst.ic);
    ++used;
  }
  return {worst <= 1e-6, fmt("worst relative gap %.2e over 6 instances", worst)};
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  const auto cases = property_instances();

  struct Criterion {
    const char* name;
    double budget_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"regression of the five-subsystem example", 1.0, regression},
      {"five-subsystem convergence in 40 steps", 1.0, convergence},
      {"oracle equivalence on 50 random instances", 30.0, [&] { return oracle_equivalence(cases); }},
      {"maximum-principle residuals", 0.0, [&] { return maximum_principle(cases); }},
      {"P + Pbar equals the naive-policy Lyapunov value", 0.0,
       [&] { return lyapunov_identity(cases); }},
      {"stabilization verdicts agree on 50 observable instances", 0.0, audit},
      {"structural invariants", 0.0, [&] { return structural(cases); }},
      {"infinite-horizon cost matches the closed form", 0.0, infinite_cost},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      o.ok = false;
      o.detail += fmt("; over the %.0f s budget", c.budget_s);
    }
    std::printf("%s [%zu] %s: %s (%.3f s)\n", o.ok ? "PASS" : "FAIL", i + 1, c.name,
                o.detail.c_str(), secs);
    failed += o.ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
