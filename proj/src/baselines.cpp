#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ccp/algorithms.hpp"
#include "ccp/error.hpp"
#include "ccp/rankops.hpp"
#include "internal.hpp"

namespace ccp {
namespace {

using internal::Outcome;
using internal::SpecBuilder;

// Feasibility slack accepted when deciding whether an engine answer that is
// not certified optimal still solves a restricted program.
constexpr double kRestrictedSlack = 1e-6;

// Variables (x, eta1, u) with u_s >= h_si(x) - eta1, u >= 0 and the row
// (m+1) eta1 + sum u - n'x <= rhs.
SubproblemSpec cvar_form_spec(const ProblemInstance& instance, const VectorXd& n,
                              double rhs) {
  const auto d = static_cast<Eigen::Index>(instance.dim());
  const auto S = static_cast<Eigen::Index>(instance.S());
  const Eigen::Index eta = d, u = d + 1;
  SpecBuilder b(instance, 1 + S);
  const auto [lo, hi] = internal::value_range(instance);
  b.set_bounds(eta, lo, hi);
  for (Eigen::Index s = 0; s < S; ++s) b.set_bounds(u + s, 0.0, kInf);
  VectorXd row = VectorXd::Zero(d + 1 + S);
  row.head(d) = -n;
  row(eta) = static_cast<double>(instance.m()) + 1.0;
  row.segment(u, S).setOnes();
  b.add_le(row, rhs);
  for (std::size_t s = 0; s < instance.S(); ++s) {
    for (std::size_t i = 0; i < instance.scenarios.I; ++i) {
      b.add_piece(instance.scenarios.piece(s, i),
                  {{eta, -1.0}, {u + static_cast<Eigen::Index>(s), -1.0}});
    }
  }
  return b.build();
}

// Residual of the single coupling row of cvar_form_spec evaluated exactly
// through the rank functionals.
double coupling_violation(const ProblemInstance& instance, const VectorXd& x,
                          const VectorXd& n, double rhs) {
  const RankFunctionals r =
      rank_functionals(scenario_values(instance, x).values, instance.m());
  return r.G1 - n.dot(x) - rhs;
}

bool accept(const SubproblemSolution& sol, double violation) {
  if (sol.status == SubproblemStatus::kInfeasible) return false;
  if (sol.status == SubproblemStatus::kOptimal) return violation <= kRestrictedSlack;
  return violation <= kRestrictedSlack && sol.primal_residual <= kRestrictedSlack;
}

}  // namespace

SolveReport dca_baseline(const ProblemInstance& instance, const PenaltySchedule& sched,
                         const VectorXd& x0, const SolveOptions& options) {
  sched.check();
  if (static_cast<std::size_t>(x0.size()) != instance.dim()) {
    throw Error(ErrorCode::kDimension, "x0 has the wrong length");
  }
  internal::Stopwatch clock;
  SubproblemSolver solver(options.engine);
  SolveReport report;
  report.algorithm = "dca";

  VectorXd x = project_onto_region(instance.region, x0, solver);
  const double phi0 = rank_functionals(scenario_values(instance, x).values, instance.m()).phi;
  if (phi0 > sched.feas_tol) {
    throw Error(ErrorCode::kInfeasibleStart,
                "dca: starting point violates the chance constraint (phi = " +
                    std::to_string(phi0) + ")");
  }
  const auto d = static_cast<Eigen::Index>(instance.dim());
  std::optional<SubproblemSolution> warm;
  Outcome outcome = Outcome::kBudget;
  double f_prev = instance.objective.value(x);
  std::size_t iters = 0;
  while (iters < sched.inner_max) {
    const VectorXd n = subgradient_G2(instance, x);
    const double G2 = rank_functionals(scenario_values(instance, x).values, instance.m()).G2;
    const double rhs = G2 - n.dot(x);
    const SubproblemSpec spec = cvar_form_spec(instance, n, rhs);
    SubproblemSolution sol = solver.solve(spec, sched.subproblem_tol, warm ? &*warm : nullptr);
    ++report.subproblems_solved;
    ++iters;
    const VectorXd x_new =
        sol.x.head(d).cwiseMax(instance.region.lower).cwiseMin(instance.region.upper);
    if (!accept(sol, coupling_violation(instance, x_new, n, rhs))) {
      outcome = Outcome::kInfeasible;
      report.message = "dca: subproblem infeasible";
      break;
    }
    x = x_new;
    warm = std::move(sol);
    const double f = instance.objective.value(x);
    if (options.record_iterates) report.inner_trace.push_back({0, 0.0, f, x, {}, {}});
    const bool done = std::abs(f - f_prev) <= sched.inner_rel_tol * std::max(1.0, std::abs(f_prev));
    f_prev = f;
    if (done) {
      outcome = Outcome::kFinished;
      break;
    }
  }
  report.sigma_trace.push_back({0.0, iters, f_prev, false});
  report.penalty_residual =
      std::max(0.0, rank_functionals(scenario_values(instance, x).values, instance.m()).phi);
  report.x_best = x;
  if (outcome == Outcome::kBudget) {
    // Every iterate stays feasible, so running out of iterations still
    // leaves a valid point.
    outcome = Outcome::kFinished;
    report.message = "dca: iteration limit reached";
  }
  internal::finalize_report(instance, report, outcome, sched.feas_tol, options, solver, clock);
  return report;
}

SolveReport cvar_baseline(const ProblemInstance& instance, double tol,
                          const SolveOptions& options) {
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cvar: tol must be > 0");
  internal::Stopwatch clock;
  SubproblemSolver solver(options.engine);
  SolveReport report;
  report.algorithm = "cvar";
  const auto d = static_cast<Eigen::Index>(instance.dim());
  const VectorXd zero = VectorXd::Zero(d);
  const SubproblemSpec spec = cvar_form_spec(instance, zero, 0.0);
  const SubproblemSolution sol = solver.solve(spec, tol);
  report.subproblems_solved = 1;
  const VectorXd x =
      sol.x.head(d).cwiseMax(instance.region.lower).cwiseMin(instance.region.upper);
  Outcome outcome = Outcome::kFinished;
  if (!accept(sol, coupling_violation(instance, x, zero, 0.0))) {
    outcome = Outcome::kInfeasible;
    report.message = "cvar: approximation infeasible";
  } else {
    report.x_best = x;
    if (options.record_iterates) {
      report.inner_trace.push_back({0, 0.0, instance.objective.value(x), x, {}, {}});
    }
  }
  report.sigma_trace.push_back({0.0, 1, sol.objective_value, false});
  internal::finalize_report(instance, report, outcome, 1e-6, options, solver, clock);
  return report;
}

std::optional<SubproblemSolution> solve_restricted(const ProblemInstance& instance,
                                                   const std::vector<std::size_t>& enforced,
                                                   SubproblemSolver& solver, double tol) {
  SpecBuilder b(instance, 0);
  for (std::size_t s : enforced) {
    if (s >= instance.S()) throw Error(ErrorCode::kInvalidArgument, "scenario index out of range");
    for (std::size_t i = 0; i < instance.scenarios.I; ++i) {
      b.add_piece(instance.scenarios.piece(s, i), {});
    }
  }
  const SubproblemSpec spec = b.build();
  SubproblemSolution sol = solver.solve(spec, tol);
  sol.x = sol.x.cwiseMax(instance.region.lower).cwiseMin(instance.region.upper);
  if (!accept(sol, internal::constraint_violation(instance, sol.x, enforced))) {
    return std::nullopt;
  }
  sol.objective_value = instance.objective.value(sol.x);
  return sol;
}

std::size_t drop_set_count(std::size_t S, std::size_t m) {
  if (m > S) return 0;
  m = std::min(m, S - m);
  std::size_t c = 1;
  for (std::size_t k = 1; k <= m; ++k) {
    const std::size_t num = S - m + k;
    if (c > std::numeric_limits<std::size_t>::max() / num) {
      return std::numeric_limits<std::size_t>::max();
    }
    c = c * num / k;
  }
  return c;
}

SolveReport enumeration_oracle(const ProblemInstance& instance, std::size_t max_subsets,
                               const SolveOptions& options) {
  const std::size_t S = instance.S();
  const std::size_t m = instance.m();
  const std::size_t total = drop_set_count(S, m);
  if (total > max_subsets) {
    throw Error(ErrorCode::kBudget, "oracle: C(" + std::to_string(S) + ", " +
                                        std::to_string(m) + ") = " + std::to_string(total) +
                                        " drop sets exceed the cap of " +
                                        std::to_string(max_subsets));
  }
  internal::Stopwatch clock;
  SubproblemSolver solver(options.engine);
  SolveReport report;
  report.algorithm = "oracle";

  // Drop sets in lexicographic order; only strict improvements replace the
  // incumbent, so ties resolve to the lexicographically smallest set.
  std::vector<std::size_t> drop(m);
  std::iota(drop.begin(), drop.end(), 0);
  std::vector<double> values;
  values.reserve(total);
  double best = kInf;
  const double tol = 1e-9;
  while (true) {
    std::vector<std::size_t> enforced;
    enforced.reserve(S - m);
    for (std::size_t s = 0, k = 0; s < S; ++s) {
      if (k < m && drop[k] == s) {
        ++k;
      } else {
        enforced.push_back(s);
      }
    }
    const auto sol = solve_restricted(instance, enforced, solver, tol);
    ++report.subproblems_solved;
    if (sol) {
      values.push_back(sol->objective_value);
      if (!std::isfinite(best) ||
          sol->objective_value < best - 1e-9 * std::max(1.0, std::abs(best))) {
        best = sol->objective_value;
        report.x_best = sol->x;
        report.drop_set = drop;
      }
    }
    // Advance to the next combination.
    std::size_t k = m;
    while (k > 0 && drop[k - 1] == S - m + k - 1) --k;
    if (k == 0) break;
    ++drop[k - 1];
    for (std::size_t j = k; j < m; ++j) drop[j] = drop[j - 1] + 1;
  }
  const double band = 1e-7 * std::max(1.0, std::abs(best));
  report.optimal_drop_sets = static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](double v) { return v <= best + band; }));
  report.sigma_trace.push_back({0.0, report.subproblems_solved, best, false});
  const Outcome outcome = report.x_best.size() > 0 ? Outcome::kFinished : Outcome::kInfeasible;
  if (outcome == Outcome::kInfeasible) report.message = "oracle: no drop set is feasible";
  internal::finalize_report(instance, report, outcome, 1e-6, options, solver, clock);
  return report;
}

}  // namespace ccp
