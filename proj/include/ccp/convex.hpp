#ifndef CCP_CONVEX_HPP
#define CCP_CONVEX_HPP

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccp/model.hpp"

namespace ccp {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// A diagonal-quadratic row over the full variable vector:
/// sum_i quad_i v_i^2 + lin' v + offset <= 0.
struct CurvedRow {
  VectorXd quad;
  VectorXd lin;
  double offset = 0.0;

  double value(const VectorXd& v) const;
  VectorXd gradient(const VectorXd& v) const;
  bool is_affine() const;
};

/// weight * [max_i piece_i(v)]_+ added to the objective.
struct CompositeTerm {
  double weight = 0.0;
  std::vector<ConstraintPiece> pieces;

  double value(const VectorXd& v) const;
};

/// min 1/2 v'Pv + q'v + constant + sum_k composite_k(v)
/// s.t. G v <= h, E v = e, lower <= v <= upper, curved rows <= 0.
struct SubproblemSpec {
  MatrixXd P;
  VectorXd q;
  double constant = 0.0;
  MatrixXd G;
  VectorXd h;
  MatrixXd E;
  VectorXd e;
  VectorXd lower;
  VectorXd upper;
  std::vector<CurvedRow> curved;
  std::vector<CompositeTerm> composite;

  /// Zero objective, no rows, unbounded variables.
  static SubproblemSpec empty(std::size_t n);

  std::size_t size() const { return static_cast<std::size_t>(q.size()); }
  bool is_polyhedral() const;
  double objective(const VectorXd& v) const;
  /// Throws Error(kDimension) / Error(kInvalidArgument) on malformed specs.
  void check() const;
};

enum class SubproblemStatus { kOptimal, kMaxIter, kInfeasible };

const char* to_string(SubproblemStatus status);

struct SubproblemSolution {
  VectorXd x;
  double objective_value = 0.0;
  VectorXd dual_ineq;   // >= 0, one per G row
  VectorXd dual_eq;     // one per E row
  VectorXd dual_bound;  // signed: > 0 at the upper bound, < 0 at the lower bound
  VectorXd dual_curved; // >= 0, one per curved row
  std::vector<VectorXd> dual_composite;  // per term, one entry per piece
  SubproblemStatus status = SubproblemStatus::kMaxIter;
  double primal_residual = kInf;
  double dual_residual = kInf;
  std::size_t iterations = 0;

  // Internal splitting state kept for warm starts.
  VectorXd warm_z;
  VectorXd warm_y;
  double warm_rho = 0.0;
};

enum class EngineKind { kAuto, kSplitting, kFallback };

struct EngineSettings {
  double over_relaxation = 1.6;
  double sigma = 1e-6;
  double rho_initial = 0.1;
  double rebalance_ratio = 10.0;
  std::size_t rebalance_interval = 25;
  std::size_t check_interval = 10;
  std::size_t max_iter_splitting = 200000;
  std::size_t max_iter_fallback = 50000;
  double infeasibility_tol = 1e-6;
  bool polish = true;
};

/// Linearly constrained QP in the form l <= A v <= u.
struct QpForm {
  MatrixXd P;
  VectorXd q;
  MatrixXd A;
  VectorXd l;
  VectorXd u;
};

struct QpResult {
  VectorXd x;
  VectorXd y;
  VectorXd z;
  SubproblemStatus status = SubproblemStatus::kMaxIter;
  double primal_residual = kInf;
  double dual_residual = kInf;
  std::size_t iterations = 0;
  double rho = 0.0;
  bool polished = false;
};

/// Alternating-direction splitting for QpForm problems. Keeps the factored
/// system between calls; re-solving with new linear costs only reuses it.
class SplittingEngine {
 public:
  explicit SplittingEngine(EngineSettings settings = {});

  QpResult solve(const QpForm& qp, double tol, const VectorXd* warm_x = nullptr,
                 const VectorXd* warm_y = nullptr, double warm_rho = 0.0);

  std::size_t factorizations() const { return factorizations_; }

 private:
  void ensure_factorization(const QpForm& qp, const VectorXd& rho_vec);
  bool try_polish(const QpForm& qp, double tol, QpResult& out) const;

  EngineSettings settings_;
  MatrixXd cached_P_;
  MatrixXd cached_A_;
  VectorXd cached_rho_;
  Eigen::LLT<MatrixXd> llt_;
  bool have_factor_ = false;
  std::size_t factorizations_ = 0;
};

/// Owns one splitting engine and its cache; serves one solve at a time.
/// Polyhedral specs go straight to the splitting engine; specs with
/// diagonal-quadratic rows or composite terms go to the fallback engine,
/// a dense primal-dual interior-point method on the epigraph form.
class SubproblemSolver {
 public:
  explicit SubproblemSolver(EngineSettings settings = {});

  SubproblemSolution solve(const SubproblemSpec& spec, double tol,
                           const SubproblemSolution* warm = nullptr,
                           EngineKind kind = EngineKind::kAuto);

  const EngineSettings& settings() const { return settings_; }
  std::size_t factorizations() const { return engine_.factorizations(); }

  /// Best objective value recorded by each fallback iteration of the last
  /// fallback solve.
  const std::vector<double>& fallback_best_trace() const { return best_trace_; }

 private:
  SubproblemSolution solve_splitting(const SubproblemSpec& spec, double tol,
                                     const SubproblemSolution* warm);
  SubproblemSolution solve_fallback(const SubproblemSpec& spec, double tol,
                                    const SubproblemSolution* warm);

  EngineSettings settings_;
  SplittingEngine engine_;
  std::vector<double> best_trace_;
};

/// One-shot convenience wrapper around SubproblemSolver.
SubproblemSolution solve_subproblem(const SubproblemSpec& spec, double tol,
                                    const SubproblemSolution* warm = nullptr);

/// Max of primal violation, dual sign violation, stationarity norm and
/// complementary slackness violation.
double kkt_residual(const SubproblemSpec& spec, const SubproblemSolution& sol);

/// Euclidean projection of a point onto the instance region.
VectorXd project_onto_region(const FeasibleRegion& region, const VectorXd& point,
                             SubproblemSolver& solver, double tol = 1e-10);

}  // namespace ccp

#endif  // CCP_CONVEX_HPP
