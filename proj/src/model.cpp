#include <algorithm>
#include <cmath>
#include <sstream>

#include "ccp/convex.hpp"
#include "ccp/error.hpp"
#include "ccp/model.hpp"

namespace ccp {
namespace {

bool all_finite(const VectorXd& v) { return v.size() == 0 || v.allFinite(); }
bool all_finite(const MatrixXd& m) { return m.size() == 0 || m.allFinite(); }

// Phase one: max t subject to l + t w <= x <= u - t w and the linear rows,
// where w = u - l. Returns t, or a negative value if the region is empty.
double phase_one(const FeasibleRegion& region) {
  const Eigen::Index d = region.lower.size();
  const VectorXd w = region.upper - region.lower;
  SubproblemSpec spec = SubproblemSpec::empty(static_cast<std::size_t>(d + 1));
  spec.q(d) = -1.0;
  const Eigen::Index mA = region.A.rows();
  spec.G = MatrixXd::Zero(mA + 2 * d, d + 1);
  spec.h = VectorXd::Zero(mA + 2 * d);
  if (mA > 0) spec.G.topLeftCorner(mA, d) = region.A;
  spec.h.head(mA) = region.b;
  for (Eigen::Index i = 0; i < d; ++i) {
    spec.G(mA + i, i) = -1.0;  // -x_i + t w_i <= -l_i
    spec.G(mA + i, d) = w(i);
    spec.h(mA + i) = -region.lower(i);
    spec.G(mA + d + i, i) = 1.0;  // x_i + t w_i <= u_i
    spec.G(mA + d + i, d) = w(i);
    spec.h(mA + d + i) = region.upper(i);
  }
  spec.E = MatrixXd::Zero(region.E.rows(), d + 1);
  if (region.E.rows() > 0) spec.E.leftCols(d) = region.E;
  spec.e = region.e;
  spec.lower.head(d) = region.lower;
  spec.upper.head(d) = region.upper;
  spec.lower(d) = 0.0;
  spec.upper(d) = 0.5;

  SubproblemSolver solver;
  const SubproblemSolution sol = solver.solve(spec, 1e-10);
  if (sol.status == SubproblemStatus::kInfeasible) return -1.0;
  const VectorXd x = sol.x.head(d);
  if (!region.contains(x, 1e-8)) return -1.0;
  return sol.x(d);
}

}  // namespace

// ---------------------------------------------------------------- pieces

ConstraintPiece ConstraintPiece::affine(VectorXd lin, double offset) {
  ConstraintPiece p;
  p.quad = VectorXd::Zero(lin.size());
  p.lin = std::move(lin);
  p.offset = offset;
  return p;
}

double ConstraintPiece::value(const VectorXd& x) const {
  double v = lin.dot(x) + offset;
  if (quad.size() == x.size()) v += quad.dot(x.cwiseAbs2());
  return v;
}

VectorXd ConstraintPiece::gradient(const VectorXd& x) const {
  if (quad.size() != x.size()) return lin;
  return 2.0 * quad.cwiseProduct(x) + lin;
}

bool ConstraintPiece::is_affine() const {
  return quad.size() == 0 || (quad.array() == 0.0).all();
}

bool ScenarioSet::all_affine() const {
  return std::all_of(pieces.begin(), pieces.end(),
                     [](const ConstraintPiece& p) { return p.is_affine(); });
}

bool FeasibleRegion::contains(const VectorXd& x, double tol) const {
  if (x.size() != lower.size()) return false;
  if ((x.array() < lower.array() - tol).any()) return false;
  if ((x.array() > upper.array() + tol).any()) return false;
  if (A.rows() > 0 && ((A * x - b).array() > tol).any()) return false;
  if (E.rows() > 0 && ((E * x - e).cwiseAbs().array() > tol).any()) return false;
  return true;
}

double Objective::value(const VectorXd& x) const {
  double v = c.dot(x);
  if (Q.size() > 0) v += x.dot(Q * x);
  return v;
}

VectorXd Objective::gradient(const VectorXd& x) const {
  if (Q.size() == 0) return c;
  return 2.0 * Q * x + c;
}

bool Objective::is_linear() const { return Q.size() == 0 || Q.isZero(0.0); }

RiskSpec::RiskSpec(double alpha, std::size_t S) : alpha_(alpha), S_(S) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "risk.alpha must lie in (0, 1)");
  }
  if (S == 0) throw Error(ErrorCode::kInvalidArgument, "risk: S must be >= 1");
  // The small shift absorbs rounding in products such as 0.2 * 5.
  const auto m = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(S) + 1e-9));
  m_ = std::min(m, S - 1);
}

std::pair<double, double> piece_range(const ConstraintPiece& piece,
                                      const VectorXd& lower,
                                      const VectorXd& upper) {
  double lo = piece.offset, hi = piece.offset;
  for (Eigen::Index i = 0; i < piece.lin.size(); ++i) {
    const double a = piece.quad.size() > 0 ? piece.quad(i) : 0.0;
    const double b = piece.lin(i);
    auto f = [&](double t) { return a * t * t + b * t; };
    const double fl = f(lower(i)), fu = f(upper(i));
    double mn = std::min(fl, fu);
    if (a > 0.0) {
      const double vertex = -b / (2.0 * a);
      if (vertex > lower(i) && vertex < upper(i)) mn = std::min(mn, f(vertex));
    }
    lo += mn;
    hi += std::max(fl, fu);
  }
  return {lo, hi};
}

// ------------------------------------------------------------ validation

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < findings.size(); ++i) {
    if (i > 0) os << "; ";
    os << findings[i].path << ": " << findings[i].message;
  }
  return os.str();
}

ValidationReport validate_instance(const ProblemInstance& inst) {
  ValidationReport rep;
  auto add = [&rep](std::string path, std::string msg) {
    rep.findings.push_back({std::move(path), std::move(msg)});
  };
  const Eigen::Index d = inst.objective.c.size();
  if (d == 0) add("d", "dimension must be >= 1");
  if (!all_finite(inst.objective.c)) add("objective.c", "non-finite coefficient");

  const MatrixXd& Q = inst.objective.Q;
  if (Q.size() > 0) {
    if (Q.rows() != d || Q.cols() != d) {
      add("objective.Q", "dimension mismatch: expected " + std::to_string(d) + "x" +
                             std::to_string(d));
    } else if (!all_finite(Q)) {
      add("objective.Q", "non-finite coefficient");
    } else {
      const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
      if (!(Q - Q.transpose()).isZero(1e-12 * scale)) {
        add("objective.Q", "objective.Q not symmetric");
      } else {
        MatrixXd shifted = Q;
        shifted.diagonal().array() += 1e-10 * scale;
        Eigen::LLT<MatrixXd> llt(shifted);
        if (llt.info() != Eigen::Success) add("objective.Q", "objective.Q not PSD");
      }
    }
  }

  const FeasibleRegion& r = inst.region;
  bool region_shape_ok = true;
  if (r.lower.size() != d || r.upper.size() != d) {
    add("region.bounds", "dimension mismatch: expected length " + std::to_string(d));
    region_shape_ok = false;
  } else {
    for (Eigen::Index i = 0; i < d; ++i) {
      const std::string idx = std::to_string(i);
      if (std::isnan(r.lower(i)) || std::isnan(r.upper(i))) {
        add("region.bounds", "NaN bound at coordinate " + idx);
        region_shape_ok = false;
      } else if (!std::isfinite(r.lower(i)) || !std::isfinite(r.upper(i))) {
        add(std::isfinite(r.lower(i)) ? "region.bounds.u[" + idx + "]"
                                      : "region.bounds.l[" + idx + "]",
            "unbounded coordinate " + idx);
        region_shape_ok = false;
      } else if (r.lower(i) > r.upper(i)) {
        add("region.bounds", "bounds inverted at coordinate " + idx);
        region_shape_ok = false;
      }
    }
  }
  if (r.A.rows() > 0 && (r.A.cols() != d || r.b.size() != r.A.rows())) {
    add("region.ineq", "dimension mismatch");
    region_shape_ok = false;
  } else if (r.b.size() != r.A.rows()) {
    add("region.ineq", "dimension mismatch");
    region_shape_ok = false;
  } else if (!all_finite(r.A) || !all_finite(r.b)) {
    add("region.ineq", "non-finite coefficient");
    region_shape_ok = false;
  }
  if (r.E.rows() > 0 && (r.E.cols() != d || r.e.size() != r.E.rows())) {
    add("region.eq", "dimension mismatch");
    region_shape_ok = false;
  } else if (r.e.size() != r.E.rows()) {
    add("region.eq", "dimension mismatch");
    region_shape_ok = false;
  } else if (!all_finite(r.E) || !all_finite(r.e)) {
    add("region.eq", "non-finite coefficient");
    region_shape_ok = false;
  }

  const ScenarioSet& sc = inst.scenarios;
  if (sc.S == 0) add("scenarios.S", "must be >= 1");
  if (sc.I == 0) add("scenarios.I", "must be >= 1");
  if (sc.pieces.size() != sc.S * sc.I) {
    add("scenarios.pieces", "array not rectangular: expected " +
                                std::to_string(sc.S * sc.I) + " pieces");
  } else {
    for (std::size_t s = 0; s < sc.S; ++s) {
      for (std::size_t i = 0; i < sc.I; ++i) {
        const ConstraintPiece& p = sc.piece(s, i);
        const std::string path =
            "scenarios.pieces[" + std::to_string(s) + "][" + std::to_string(i) + "]";
        if (p.lin.size() != d || (p.quad.size() != 0 && p.quad.size() != d)) {
          add(path, "dimension mismatch");
          continue;
        }
        if (!all_finite(p.lin) || !all_finite(p.quad) || !std::isfinite(p.offset)) {
          add(path, "non-finite coefficient");
        }
        if (p.quad.size() > 0 && (p.quad.array() < 0.0).any()) {
          add(path + ".quad", "negative curvature");
        }
      }
    }
  }
  if (!(inst.risk.alpha() > 0.0 && inst.risk.alpha() < 1.0)) {
    add("risk.alpha", "must lie in (0, 1)");
  } else if (inst.risk.S() != sc.S) {
    add("risk", "scenario count mismatch");
  }

  if (region_shape_ok && d > 0) {
    const double t = phase_one(r);
    if (t < 0.0) {
      add("region", "region infeasible");
    } else if (t <= 1e-8 && (r.upper - r.lower).maxCoeff() > 0.0) {
      add("region", "region has no point strictly inside the bound box");
    }
  }
  return rep;
}

void require_valid(const ProblemInstance& instance) {
  const ValidationReport rep = validate_instance(instance);
  if (!rep.ok()) throw Error(ErrorCode::kValidation, rep.summary());
}

// --------------------------------------------------------------- fixtures

ProblemInstance reference_t1(double alpha) {
  ProblemInstance inst;
  inst.name = "t1";
  inst.objective.Q = MatrixXd::Zero(1, 1);
  inst.objective.c = VectorXd::Constant(1, -1.0);
  inst.region.A = MatrixXd::Zero(0, 1);
  inst.region.b = VectorXd::Zero(0);
  inst.region.E = MatrixXd::Zero(0, 1);
  inst.region.e = VectorXd::Zero(0);
  inst.region.lower = VectorXd::Zero(1);
  inst.region.upper = VectorXd::Ones(1);
  const double b[] = {0.1, 0.2, 0.3, 0.9, 1.0};
  inst.scenarios.S = 5;
  inst.scenarios.I = 1;
  for (double bs : b) {
    inst.scenarios.pieces.push_back(ConstraintPiece::affine(VectorXd::Ones(1), -bs));
  }
  inst.risk = RiskSpec(alpha, 5);
  return inst;
}

ProblemInstance reference_example1(double slope) {
  ProblemInstance inst;
  inst.name = "example1";
  inst.objective.Q = MatrixXd::Zero(1, 1);
  inst.objective.c = VectorXd::Constant(1, slope);
  inst.region.A = MatrixXd::Zero(0, 1);
  inst.region.b = VectorXd::Zero(0);
  inst.region.E = MatrixXd::Zero(0, 1);
  inst.region.e = VectorXd::Zero(0);
  inst.region.lower = VectorXd::Constant(1, -1.0);
  inst.region.upper = VectorXd::Ones(1);
  inst.scenarios.S = 2;
  inst.scenarios.I = 2;
  const VectorXd one = VectorXd::Ones(1);
  const VectorXd zero = VectorXd::Zero(1);
  inst.scenarios.pieces = {ConstraintPiece::affine(one, 0.0),
                           ConstraintPiece::affine(zero, 0.0),
                           ConstraintPiece::affine(-one, 0.0),
                           ConstraintPiece::affine(zero, 0.0)};
  inst.risk = RiskSpec(0.5, 2);
  return inst;
}

}  // namespace ccp
