#include <algorithm>
#include <cmath>

#include "ccp/algorithms.hpp"
#include "ccp/error.hpp"
#include "ccp/rankops.hpp"
#include "internal.hpp"

namespace ccp {
namespace {

using internal::Outcome;
using internal::SpecBuilder;

void check_point(const ProblemInstance& instance, const VectorXd& x, const char* what) {
  if (static_cast<std::size_t>(x.size()) != instance.dim()) {
    throw Error(ErrorCode::kDimension, std::string(what) + " has length " +
                                           std::to_string(x.size()) + ", expected " +
                                           std::to_string(instance.dim()));
  }
  if (!x.allFinite()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " not finite");
}

std::size_t inner_cap(const PenaltySchedule& sched, std::size_t outer) {
  if (outer == 0) return std::min(sched.warm_cap_first, sched.inner_max);
  if (outer == 1) return std::min(sched.warm_cap_second, sched.inner_max);
  return sched.inner_max;
}

bool small_change(double now, double before, double rel_tol) {
  return std::abs(now - before) <= rel_tol * std::max(1.0, std::abs(before));
}

std::size_t satisfied_count(const ProblemInstance& instance, const VectorXd& x,
                            double feas_tol) {
  const ScenarioValues sv = scenario_values(instance, x);
  return static_cast<std::size_t>((sv.values.array() <= feas_tol).count());
}

// Variable layout of the primal epigraph subproblem:
// x (d), t, eta1, u (S), and when m > 0 also eta2, v (S).
struct PrimalLayout {
  Eigen::Index d, t, eta1, u, eta2, v, size;
};

PrimalLayout primal_layout(const ProblemInstance& instance) {
  const auto d = static_cast<Eigen::Index>(instance.dim());
  const auto S = static_cast<Eigen::Index>(instance.S());
  PrimalLayout L{};
  L.d = d;
  L.t = d;
  L.eta1 = d + 1;
  L.u = d + 2;
  if (instance.m() > 0) {
    L.eta2 = L.u + S;
    L.v = L.eta2 + 1;
    L.size = L.v + S;
  } else {
    // G2 vanishes when m == 0; t >= 0 takes the place of its epigraph row.
    L.eta2 = L.v = -1;
    L.size = L.u + S;
  }
  return L;
}

SubproblemSpec primal_spec(const ProblemInstance& instance, const PrimalLayout& L,
                           double rho) {
  const auto S = static_cast<Eigen::Index>(instance.S());
  const auto m = static_cast<double>(instance.m());
  SpecBuilder b(instance, L.size - L.d);
  const auto [lo, hi] = internal::value_range(instance);
  b.set_bounds(L.eta1, lo, hi);
  for (Eigen::Index s = 0; s < S; ++s) b.set_bounds(L.u + s, 0.0, kInf);
  if (L.eta2 < 0) b.set_bounds(L.t, 0.0, kInf);

  // t >= (m+1) eta1 + sum u
  VectorXd row = VectorXd::Zero(L.size);
  row(L.t) = -1.0;
  row(L.eta1) = m + 1.0;
  row.segment(L.u, S).setOnes();
  b.add_le(row, 0.0);
  if (L.eta2 >= 0) {
    b.set_bounds(L.eta2, lo, hi);
    for (Eigen::Index s = 0; s < S; ++s) b.set_bounds(L.v + s, 0.0, kInf);
    row.setZero();
    row(L.t) = -1.0;
    row(L.eta2) = m;
    row.segment(L.v, S).setOnes();
    b.add_le(row, 0.0);
  }
  for (std::size_t s = 0; s < instance.S(); ++s) {
    const auto si = static_cast<Eigen::Index>(s);
    for (std::size_t i = 0; i < instance.scenarios.I; ++i) {
      const ConstraintPiece& p = instance.scenarios.piece(s, i);
      b.add_piece(p, {{L.eta1, -1.0}, {L.u + si, -1.0}});
      if (L.eta2 >= 0) b.add_piece(p, {{L.eta2, -1.0}, {L.v + si, -1.0}});
    }
  }
  SubproblemSpec spec = b.build();
  spec.P.topLeftCorner(L.d, L.d).diagonal().array() += rho;
  return spec;
}

double primal_objective(const ProblemInstance& instance, const VectorXd& x, double sigma) {
  const RankFunctionals r =
      rank_functionals(scenario_values(instance, x).values, instance.m());
  return instance.objective.value(x) + sigma * std::max(r.phi, 0.0);
}

}  // namespace

SolveReport pendc_primal(const ProblemInstance& instance, const PenaltySchedule& sched,
                         const VectorXd& x0, const SolveOptions& options) {
  sched.check();
  check_point(instance, x0, "x0");
  internal::Stopwatch clock;
  SubproblemSolver solver(options.engine);
  SolveReport report;
  report.algorithm = "pendc-p";

  VectorXd x = project_onto_region(instance.region, x0, solver);
  const PrimalLayout L = primal_layout(instance);
  SubproblemSpec spec = primal_spec(instance, L, sched.rho);
  const VectorXd q_base = spec.q;
  std::optional<SubproblemSolution> warm;

  double sigma = sched.sigma0;
  Outcome outcome = Outcome::kBudget;
  for (std::size_t outer = 0; outer < sched.outer_max; ++outer) {
    const std::size_t cap = inner_cap(sched, outer);
    double F_prev = primal_objective(instance, x, sigma);
    std::size_t inner = 0;
    while (inner < cap) {
      const VectorXd n = subgradient_G2(instance, x);
      spec.q = q_base;
      spec.q.head(L.d) += -sigma * n - sched.rho * x;
      spec.q(L.t) = sigma;
      spec.constant = 0.5 * sched.rho * x.squaredNorm();
      SubproblemSolution sol =
          solver.solve(spec, sched.subproblem_tol, warm ? &*warm : nullptr);
      ++report.subproblems_solved;
      if (sol.status == SubproblemStatus::kInfeasible) {
        throw Error(ErrorCode::kEngine, "pendc-p: subproblem reported infeasible");
      }
      x = sol.x.head(L.d).cwiseMax(instance.region.lower).cwiseMin(instance.region.upper);
      warm = std::move(sol);
      ++inner;
      const double F = primal_objective(instance, x, sigma);
      if (options.record_iterates) report.inner_trace.push_back({outer, sigma, F, x, {}, {}});
      const bool done = small_change(F, F_prev, sched.inner_rel_tol);
      F_prev = F;
      if (done) break;
    }
    report.sigma_trace.push_back({sigma, inner, F_prev, false});
    const double phi =
        rank_functionals(scenario_values(instance, x).values, instance.m()).phi;
    report.penalty_residual = std::max(phi, 0.0);
    if (satisfied_count(instance, x, sched.feas_tol) >= instance.risk.required() &&
        report.penalty_residual <= sched.feas_tol) {
      outcome = Outcome::kFinished;
      break;
    }
    sigma *= sched.beta;
  }
  report.x_best = x;
  if (outcome == Outcome::kBudget) report.message = "outer iteration budget reached";
  internal::finalize_report(instance, report, outcome, sched.feas_tol, options, solver, clock);
  return report;
}

InnerSolve inner_xy_solve(const ProblemInstance& instance, const VectorXd& z,
                          double sigma, SubproblemSolver& solver, double tol,
                          const SubproblemSolution* warm) {
  const auto S = static_cast<Eigen::Index>(instance.S());
  if (z.size() != S) throw Error(ErrorCode::kDimension, "inner solve: z has wrong length");
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "inner solve: sigma must be > 0");
  const auto d = static_cast<Eigen::Index>(instance.dim());
  InnerSolve out;
  if (instance.scenarios.all_affine()) {
    SpecBuilder b(instance, S);
    for (Eigen::Index s = 0; s < S; ++s) b.set_bounds(d + s, 0.0, kInf);
    for (std::size_t s = 0; s < instance.S(); ++s) {
      for (std::size_t i = 0; i < instance.scenarios.I; ++i) {
        b.add_piece(instance.scenarios.piece(s, i), {{d + static_cast<Eigen::Index>(s), -1.0}});
      }
    }
    SubproblemSpec spec = b.build();
    spec.q.tail(S) = sigma * z;
    out.report = solver.solve(spec, tol, warm);
  } else {
    SpecBuilder b(instance, 0);
    SubproblemSpec spec = b.build();
    for (std::size_t s = 0; s < instance.S(); ++s) {
      const double w = sigma * z(static_cast<Eigen::Index>(s));
      if (w <= 0.0) continue;
      CompositeTerm term;
      term.weight = w;
      for (std::size_t i = 0; i < instance.scenarios.I; ++i) {
        term.pieces.push_back(instance.scenarios.piece(s, i));
      }
      spec.composite.push_back(std::move(term));
    }
    out.report = solver.solve(spec, tol, warm);
  }
  if (out.report.status == SubproblemStatus::kInfeasible) {
    throw Error(ErrorCode::kEngine, "inner solve: subproblem reported infeasible");
  }
  out.x = out.report.x.head(d).cwiseMax(instance.region.lower).cwiseMin(instance.region.upper);
  out.y = scenario_values(instance, out.x).values.cwiseMax(0.0);
  return out;
}

VectorXd update_selector(const VectorXd& z, const VectorXd& y, double sigma,
                         double rho, std::size_t m) {
  if (z.size() != y.size()) throw Error(ErrorCode::kDimension, "selector update: length mismatch");
  if (rho > 0.0) return project_onto_C(z - (sigma / rho) * y, m);
  VectorXd next = VectorXd::Ones(z.size());
  for (std::size_t s : top_m_indices(y, m)) next(static_cast<Eigen::Index>(s)) = 0.0;
  return next;
}

SolveReport pendc_lifted(const ProblemInstance& instance, const PenaltySchedule& sched,
                         const VectorXd& z0, const SolveOptions& options) {
  sched.check();
  const auto S = static_cast<Eigen::Index>(instance.S());
  const std::size_t m = instance.m();
  if (z0.size() != 0 && z0.size() != S) {
    throw Error(ErrorCode::kDimension, "z0 must have length S");
  }
  internal::Stopwatch clock;
  SubproblemSolver solver(options.engine);
  SolveReport report;
  report.algorithm = "pendc-l";

  VectorXd z = z0.size() == 0 ? VectorXd::Ones(S) : project_onto_C(z0, m);
  VectorXd x, y;
  std::optional<SubproblemSolution> warm;
  double sigma = sched.sigma0;
  Outcome outcome = Outcome::kBudget;
  for (std::size_t outer = 0; outer < sched.outer_max; ++outer) {
    const std::size_t cap = inner_cap(sched, outer);
    double psi_prev = kInf;
    std::size_t inner = 0;
    bool stalled = false;
    while (inner < cap) {
      InnerSolve xy = inner_xy_solve(instance, z, sigma, solver, sched.subproblem_tol,
                                     warm ? &*warm : nullptr);
      ++report.subproblems_solved;
      x = std::move(xy.x);
      y = std::move(xy.y);
      warm = std::move(xy.report);
      ++inner;
      const double psi = instance.objective.value(x) + sigma * y.dot(z);
      if (options.record_iterates) report.inner_trace.push_back({outer, sigma, psi, x, y, z});
      const VectorXd z_next = update_selector(z, y, sigma, sched.rho, m);
      if (z_next == z) {
        stalled = true;
        psi_prev = psi;
        break;
      }
      z = z_next;
      const bool done = std::isfinite(psi_prev) && small_change(psi, psi_prev, sched.inner_rel_tol);
      psi_prev = psi;
      if (done) break;
    }
    report.sigma_trace.push_back({sigma, inner, psi_prev, stalled});
    report.penalty_residual = y.dot(z);
    if (satisfied_count(instance, x, sched.feas_tol) >= instance.risk.required() &&
        report.penalty_residual <= sched.feas_tol) {
      outcome = Outcome::kFinished;
      break;
    }
    sigma *= sched.beta;
  }
  report.x_best = x;
  report.y = y;
  report.z = z;
  if (outcome == Outcome::kBudget) report.message = "outer iteration budget reached";
  internal::finalize_report(instance, report, outcome, sched.feas_tol, options, solver, clock);
  return report;
}

}  // namespace ccp
