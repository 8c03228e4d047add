#ifndef CCP_SRC_INTERNAL_HPP
#define CCP_SRC_INTERNAL_HPP

#include <chrono>
#include <utility>
#include <vector>

#include "ccp/algorithms.hpp"
#include "ccp/convex.hpp"
#include "ccp/model.hpp"

namespace ccp::internal {

/// Assembles subproblems over (x, extra variables) sharing the instance's
/// objective and region. Rows are collected first and stacked once.
class SpecBuilder {
 public:
  SpecBuilder(const ProblemInstance& instance, Eigen::Index extra);

  Eigen::Index dim() const { return d_; }
  Eigen::Index size() const { return n_; }

  void set_bounds(Eigen::Index j, double lo, double hi);
  /// row' v <= rhs.
  void add_le(const VectorXd& row, double rhs);
  /// piece(x) + sum_k coef_k v_{idx_k} <= rhs; becomes a curved row when the
  /// piece has curvature.
  void add_piece(const ConstraintPiece& piece,
                 const std::vector<std::pair<Eigen::Index, double>>& aux,
                 double rhs = 0.0);

  SubproblemSpec build() const;

 private:
  Eigen::Index d_;
  Eigen::Index n_;
  SubproblemSpec base_;
  std::vector<VectorXd> rows_;
  std::vector<double> rhs_;
  std::vector<CurvedRow> curved_;
};

/// Range [lo, hi] covering every piece value over the bound box.
std::pair<double, double> value_range(const ProblemInstance& instance);

/// Largest violation of the enforced scenario constraints and of the region.
double constraint_violation(const ProblemInstance& instance, const VectorXd& x,
                            const std::vector<std::size_t>& enforced);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

enum class Outcome { kFinished, kBudget, kInfeasible };

/// Fills fval, probability, status, certificates and provenance fields.
void finalize_report(const ProblemInstance& instance, SolveReport& report,
                     Outcome outcome, double feas_tol, const SolveOptions& options,
                     SubproblemSolver& solver, const Stopwatch& clock);

}  // namespace ccp::internal

#endif  // CCP_SRC_INTERNAL_HPP
