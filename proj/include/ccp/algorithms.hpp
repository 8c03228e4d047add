#ifndef CCP_ALGORITHMS_HPP
#define CCP_ALGORITHMS_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ccp/convex.hpp"
#include "ccp/model.hpp"

namespace ccp {

/// Outer/inner loop control shared by the penalty methods and DCA.
struct PenaltySchedule {
  double sigma0 = 5e-3;
  double beta = 4.0;
  double rho = 1e-4;
  double inner_rel_tol = 1e-6;
  std::size_t outer_max = 30;
  std::size_t inner_max = 500;
  std::size_t warm_cap_first = 1;
  std::size_t warm_cap_second = 2;
  double feas_tol = 1e-6;
  double subproblem_tol = 1e-8;

  /// Defaults for the lifted-space method.
  static PenaltySchedule lifted_defaults();
  /// Defaults for the primal-space method; rho depends on the piece type.
  static PenaltySchedule primal_defaults(const ProblemInstance& instance);

  /// Throws Error(kInvalidArgument) naming the offending field.
  void check() const;
};

/// (x, y, z) with g_s(x) <= y_s, y >= 0 and z in C.
struct LiftedPoint {
  VectorXd x;
  VectorXd y;
  VectorXd z;
};

enum class ReportStatus { kFeasibleStationary, kFeasible, kInfeasible, kBudgetExhausted };

const char* to_string(ReportStatus status);

struct SigmaRecord {
  double sigma = 0.0;
  std::size_t inner_iterations = 0;
  double objective = 0.0;
  bool stalled = false;  // lifted method: z repeated exactly
};

/// One inner iteration. For the primal method y and z are empty and the
/// objective is f(x) + sigma [phi(x)]_+; for the lifted method it is
/// f(x) + sigma V(y, z) with z the selector used by the (x, y) solve.
struct InnerRecord {
  std::size_t outer = 0;
  double sigma = 0.0;
  double objective = 0.0;
  VectorXd x;
  VectorXd y;
  VectorXd z;
};

struct StrongCertificate {
  bool positive = false;
  double point_value = 0.0;
  double relaxed_value = 0.0;
  std::vector<std::size_t> index_y;  // y_s = 0 < z_s: g_s(x) <= 0 enforced
  std::vector<std::size_t> index_z;  // z_s = 0 < y_s
  std::vector<std::size_t> index_0;  // both zero
};

struct SolveReport {
  std::string algorithm;
  VectorXd x_best;
  double fval = 0.0;
  double empirical_prob = 0.0;
  ReportStatus status = ReportStatus::kInfeasible;
  std::vector<SigmaRecord> sigma_trace;
  std::vector<InnerRecord> inner_trace;
  double penalty_residual = 0.0;
  double wall_time_s = 0.0;
  std::optional<StrongCertificate> strong;
  std::optional<bool> strict_gap;
  std::string instance_hash;
  std::string message;
  std::size_t subproblems_solved = 0;

  // Lifted method: final y and z.
  VectorXd y;
  VectorXd z;

  // Enumeration oracle only.
  std::vector<std::size_t> drop_set;
  std::size_t optimal_drop_sets = 0;

  bool feasible() const {
    return status == ReportStatus::kFeasibleStationary ||
           status == ReportStatus::kFeasible;
  }
};

struct SolveOptions {
  EngineSettings engine;
  /// Compute the strong-stationarity and strict-gap certificates at the end.
  bool certify = true;
  /// Record (x, y, z) of every inner iteration.
  bool record_iterates = true;
};

/// Center of the bound box projected onto the region.
VectorXd default_start(const ProblemInstance& instance);
/// Uniform sample in the bound box projected onto the region.
VectorXd random_start(const ProblemInstance& instance, std::uint64_t seed);

/// Penalty method in the primal space.
SolveReport pendc_primal(const ProblemInstance& instance, const PenaltySchedule& sched,
                         const VectorXd& x0, const SolveOptions& options = {});

/// Penalty method in the lifted (x, y, z) space. An empty z0 means all ones.
SolveReport pendc_lifted(const ProblemInstance& instance, const PenaltySchedule& sched,
                         const VectorXd& z0 = VectorXd(),
                         const SolveOptions& options = {});

struct InnerSolve {
  VectorXd x;
  VectorXd y;
  SubproblemSolution report;
};

/// min f(x) + sigma sum_s z_s y_s over x in X, y >= 0, g_s(x) <= y_s.
/// y is returned pinned to [g_s(x)]_+.
InnerSolve inner_xy_solve(const ProblemInstance& instance, const VectorXd& z,
                          double sigma, SubproblemSolver& solver, double tol,
                          const SubproblemSolution* warm = nullptr);

/// Selector update: projection step when rho > 0, vertex rule when rho == 0.
VectorXd update_selector(const VectorXd& z, const VectorXd& y, double sigma,
                         double rho, std::size_t m);

/// Difference-of-convex baseline; x0 must satisfy the chance constraint.
SolveReport dca_baseline(const ProblemInstance& instance, const PenaltySchedule& sched,
                         const VectorXd& x0, const SolveOptions& options = {});

/// Conservative approximation G1(x) <= 0.
SolveReport cvar_baseline(const ProblemInstance& instance, double tol = 1e-8,
                          const SolveOptions& options = {});

/// Exact global optimum by trying every drop set of size m.
SolveReport enumeration_oracle(const ProblemInstance& instance,
                               std::size_t max_subsets = 200000,
                               const SolveOptions& options = {});

/// Number of drop sets C(S, m), saturating at SIZE_MAX.
std::size_t drop_set_count(std::size_t S, std::size_t m);

/// Lifts a point satisfying the chance constraint to (x, y, z) with V = 0.
LiftedPoint lift_point(const ProblemInstance& instance, const VectorXd& x,
                       double feas_tol = 1e-6);

StrongCertificate check_strong_stationarity(const ProblemInstance& instance,
                                            const LiftedPoint& point, double tol,
                                            SubproblemSolver* solver = nullptr);

bool check_strict_gap(const ProblemInstance& instance, const VectorXd& x,
                      double strict_tol = 1e-9);

/// min f(x) over X subject to g_s(x) <= 0 for the listed scenarios.
/// Returns nullopt when that program is infeasible.
std::optional<SubproblemSolution> solve_restricted(const ProblemInstance& instance,
                                                   const std::vector<std::size_t>& enforced,
                                                   SubproblemSolver& solver, double tol);

}  // namespace ccp

#endif  // CCP_ALGORITHMS_HPP
