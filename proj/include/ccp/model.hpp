#ifndef CCP_MODEL_HPP
#define CCP_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ccp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One convex piece h(x) = sum_i quad_i * x_i^2 + lin' x + offset.
struct ConstraintPiece {
  VectorXd quad;
  VectorXd lin;
  double offset = 0.0;

  static ConstraintPiece affine(VectorXd lin, double offset);

  double value(const VectorXd& x) const;
  VectorXd gradient(const VectorXd& x) const;
  bool is_affine() const;
  std::size_t dim() const { return static_cast<std::size_t>(lin.size()); }
};

/// S scenarios, each holding exactly I pieces; g_s(x) = max_i h_{s,i}(x).
struct ScenarioSet {
  std::size_t S = 0;
  std::size_t I = 0;
  std::vector<ConstraintPiece> pieces;  // row-major, scenario s at [s*I, s*I+I)

  const ConstraintPiece& piece(std::size_t s, std::size_t i) const {
    return pieces[s * I + i];
  }
  bool all_affine() const;
};

/// Polyhedral region {x : A x <= b, E x = e, l <= x <= u}.
struct FeasibleRegion {
  MatrixXd A;
  VectorXd b;
  MatrixXd E;
  VectorXd e;
  VectorXd lower;
  VectorXd upper;

  bool contains(const VectorXd& x, double tol) const;
  bool has_linear_rows() const { return A.rows() > 0 || E.rows() > 0; }
};

/// f(x) = x' Q x + c' x. Q may be the zero matrix.
struct Objective {
  MatrixXd Q;
  VectorXd c;

  double value(const VectorXd& x) const;
  VectorXd gradient(const VectorXd& x) const;
  bool is_linear() const;
};

/// Violation level alpha and the derived scenario budget m = floor(alpha S).
class RiskSpec {
 public:
  RiskSpec() = default;
  RiskSpec(double alpha, std::size_t S);

  double alpha() const { return alpha_; }
  std::size_t S() const { return S_; }
  std::size_t m() const { return m_; }
  /// Minimum number of scenarios that must be satisfied.
  std::size_t required() const { return S_ - m_; }

 private:
  double alpha_ = 0.0;
  std::size_t S_ = 0;
  std::size_t m_ = 0;
};

struct ProblemInstance {
  std::string name;
  Objective objective;
  FeasibleRegion region;
  ScenarioSet scenarios;
  RiskSpec risk;

  std::size_t dim() const { return static_cast<std::size_t>(objective.c.size()); }
  std::size_t S() const { return scenarios.S; }
  std::size_t m() const { return risk.m(); }
};

struct Finding {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
  std::string summary() const;
};

/// Checks every type invariant plus a phase-one solve certifying that the
/// region has a point strictly inside the bound box.
ValidationReport validate_instance(const ProblemInstance& instance);

/// Throws Error(kValidation) listing all findings when the instance is invalid.
void require_valid(const ProblemInstance& instance);

// ---------------------------------------------------------------- file I/O

ProblemInstance load_instance(const std::string& path);
ProblemInstance parse_instance(const std::string& text);
std::string canonical_text(const ProblemInstance& instance);
void save_instance(const ProblemInstance& instance, const std::string& path);
/// FNV-1a over the canonical text, rendered as "fnv1a64:<hex>".
std::string instance_hash(const ProblemInstance& instance);

/// Loads a returns matrix (rows = scenarios, columns = assets) from CSV.
MatrixXd load_scenario_csv(const std::string& path);

// -------------------------------------------------------------- generators

enum class Family { kNorm, kTransport, kPortfolio };

Family parse_family(const std::string& name);
const char* to_string(Family family);

/// Family parameters as a flat key/value map. Recognised keys per family:
///   norm:      d, mcons, theta, S, alpha, xmax
///   transport: n, m_cust, S, alpha, demand_loc, demand_scale, capacity_factor
///   portfolio: n, S, alpha, gamma, target, cap
using FamilyParams = std::map<std::string, double>;

ProblemInstance generate_instance(Family family, const FamilyParams& params,
                                  std::uint64_t seed);

/// Portfolio instance from a returns matrix: mean/covariance estimated from
/// the rows, one affine piece target - xi_s' x per scenario.
ProblemInstance portfolio_from_returns(const MatrixXd& returns, double alpha,
                                       double gamma, double target, double cap,
                                       const std::string& name);

// ---------------------------------------------------------------- fixtures

/// d=1, f(x)=-x on [0,1], h_s(x)=x-b_s with b=(0.1,0.2,0.3,0.9,1.0), alpha=0.2.
ProblemInstance reference_t1(double alpha = 0.2);
/// S=2, m=1, g_1=[x]_+, g_2=[-x]_+ on [-1, 1] with objective f(x)=slope*x.
ProblemInstance reference_example1(double slope = 1.0);

/// Range [lo, hi] of a piece over the bound box.
std::pair<double, double> piece_range(const ConstraintPiece& piece,
                                      const VectorXd& lower,
                                      const VectorXd& upper);

}  // namespace ccp

#endif  // CCP_MODEL_HPP
