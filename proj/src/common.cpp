#include <algorithm>
#include <cmath>
#include <random>

#include "ccp/error.hpp"
#include "ccp/rankops.hpp"
#include "internal.hpp"

namespace ccp {
namespace internal {

SpecBuilder::SpecBuilder(const ProblemInstance& instance, Eigen::Index extra)
    : d_(static_cast<Eigen::Index>(instance.dim())), n_(d_ + extra) {
  base_ = SubproblemSpec::empty(static_cast<std::size_t>(n_));
  if (instance.objective.Q.size() > 0) {
    base_.P.topLeftCorner(d_, d_) = 2.0 * instance.objective.Q;
  }
  base_.q.head(d_) = instance.objective.c;
  const FeasibleRegion& r = instance.region;
  for (Eigen::Index i = 0; i < r.A.rows(); ++i) {
    VectorXd row = VectorXd::Zero(n_);
    row.head(d_) = r.A.row(i).transpose();
    add_le(row, r.b(i));
  }
  base_.E = MatrixXd::Zero(r.E.rows(), n_);
  if (r.E.rows() > 0) base_.E.leftCols(d_) = r.E;
  base_.e = r.e;
  base_.lower.head(d_) = r.lower;
  base_.upper.head(d_) = r.upper;
}

void SpecBuilder::set_bounds(Eigen::Index j, double lo, double hi) {
  base_.lower(j) = lo;
  base_.upper(j) = hi;
}

void SpecBuilder::add_le(const VectorXd& row, double rhs) {
  rows_.push_back(row);
  rhs_.push_back(rhs);
}

void SpecBuilder::add_piece(const ConstraintPiece& piece,
                            const std::vector<std::pair<Eigen::Index, double>>& aux,
                            double rhs) {
  VectorXd lin = VectorXd::Zero(n_);
  lin.head(d_) = piece.lin;
  for (const auto& [idx, coef] : aux) lin(idx) += coef;
  if (piece.is_affine()) {
    add_le(lin, rhs - piece.offset);
    return;
  }
  CurvedRow row;
  row.quad = VectorXd::Zero(n_);
  row.quad.head(d_) = piece.quad;
  row.lin = std::move(lin);
  row.offset = piece.offset - rhs;
  curved_.push_back(std::move(row));
}

SubproblemSpec SpecBuilder::build() const {
  SubproblemSpec spec = base_;
  const auto rows = static_cast<Eigen::Index>(rows_.size());
  spec.G = MatrixXd::Zero(rows, n_);
  spec.h = VectorXd::Zero(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    spec.G.row(i) = rows_[static_cast<std::size_t>(i)].transpose();
    spec.h(i) = rhs_[static_cast<std::size_t>(i)];
  }
  spec.curved = curved_;
  return spec;
}

std::pair<double, double> value_range(const ProblemInstance& instance) {
  double lo = kInf, hi = -kInf;
  for (const ConstraintPiece& p : instance.scenarios.pieces) {
    const auto [a, b] = piece_range(p, instance.region.lower, instance.region.upper);
    lo = std::min(lo, a);
    hi = std::max(hi, b);
  }
  return {lo, hi};
}

double constraint_violation(const ProblemInstance& instance, const VectorXd& x,
                            const std::vector<std::size_t>& enforced) {
  const FeasibleRegion& r = instance.region;
  double worst = 0.0;
  worst = std::max(worst, (r.lower - x).maxCoeff());
  worst = std::max(worst, (x - r.upper).maxCoeff());
  if (r.A.rows() > 0) worst = std::max(worst, (r.A * x - r.b).maxCoeff());
  if (r.E.rows() > 0) worst = std::max(worst, (r.E * x - r.e).cwiseAbs().maxCoeff());
  for (std::size_t s : enforced) {
    for (std::size_t i = 0; i < instance.scenarios.I; ++i) {
      worst = std::max(worst, instance.scenarios.piece(s, i).value(x));
    }
  }
  return worst;
}

void finalize_report(const ProblemInstance& instance, SolveReport& report,
                     Outcome outcome, double feas_tol, const SolveOptions& options,
                     SubproblemSolver& solver, const Stopwatch& clock) {
  report.instance_hash = instance_hash(instance);
  if (report.x_best.size() == 0) {
    report.status = outcome == Outcome::kBudget ? ReportStatus::kBudgetExhausted
                                                : ReportStatus::kInfeasible;
    report.wall_time_s = clock.seconds();
    return;
  }
  report.fval = instance.objective.value(report.x_best);
  const ScenarioValues sv = scenario_values(instance, report.x_best);
  const auto satisfied = static_cast<std::size_t>((sv.values.array() <= feas_tol).count());
  report.empirical_prob =
      static_cast<double>(satisfied) / static_cast<double>(instance.S());
  const bool feasible = outcome != Outcome::kInfeasible &&
                        satisfied >= instance.risk.required() &&
                        instance.region.contains(report.x_best, 1e-6);
  if (!feasible) {
    report.status = outcome == Outcome::kBudget ? ReportStatus::kBudgetExhausted
                                                : ReportStatus::kInfeasible;
    report.wall_time_s = clock.seconds();
    return;
  }
  report.status = ReportStatus::kFeasible;
  if (options.certify) {
    report.strict_gap = check_strict_gap(instance, report.x_best, feas_tol);
    try {
      const LiftedPoint lp = lift_point(instance, report.x_best, feas_tol);
      report.strong = check_strong_stationarity(instance, lp, std::max(feas_tol, 1e-7), &solver);
      if (report.strong->positive) report.status = ReportStatus::kFeasibleStationary;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPrecondition) throw;
    }
  }
  report.wall_time_s = clock.seconds();
}

}  // namespace internal

VectorXd default_start(const ProblemInstance& instance) {
  SubproblemSolver solver;
  const VectorXd center = 0.5 * (instance.region.lower + instance.region.upper);
  return project_onto_region(instance.region, center, solver);
}

VectorXd random_start(const ProblemInstance& instance, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const FeasibleRegion& r = instance.region;
  VectorXd x(r.lower.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x(i) = r.lower(i) + unit(rng) * (r.upper(i) - r.lower(i));
  }
  SubproblemSolver solver;
  return project_onto_region(r, x, solver);
}

const char* to_string(ReportStatus status) {
  switch (status) {
    case ReportStatus::kFeasibleStationary:
      return "feasible_stationary";
    case ReportStatus::kFeasible:
      return "feasible";
    case ReportStatus::kInfeasible:
      return "infeasible";
    case ReportStatus::kBudgetExhausted:
      return "budget_exhausted";
  }
  return "unknown";
}

PenaltySchedule PenaltySchedule::lifted_defaults() {
  // Slower penalty growth lets z settle before sigma dominates the objective.
  PenaltySchedule s;
  s.beta = 2.0;
  return s;
}

PenaltySchedule PenaltySchedule::primal_defaults(const ProblemInstance& instance) {
  PenaltySchedule s;
  s.sigma0 = 3e-3;
  s.beta = 1.5;
  s.rho = instance.scenarios.all_affine() ? 0.0 : 1e-3;
  return s;
}

void PenaltySchedule::check() const {
  auto bad = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "schedule: " + what);
  };
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) bad("sigma0 must be > 0");
  if (!(beta > 1.0) || !std::isfinite(beta)) bad("beta must be > 1");
  if (!(rho >= 0.0) || !std::isfinite(rho)) bad("rho must be >= 0");
  if (!(inner_rel_tol > 0.0)) bad("inner_rel_tol must be > 0");
  if (!(feas_tol > 0.0)) bad("feas_tol must be > 0");
  if (!(subproblem_tol > 0.0)) bad("subproblem_tol must be > 0");
  if (outer_max == 0) bad("outer_max must be >= 1");
  if (inner_max == 0) bad("inner_max must be >= 1");
  if (warm_cap_first == 0 || warm_cap_second == 0) bad("warm-start caps must be >= 1");
}

}  // namespace ccp
