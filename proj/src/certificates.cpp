#include <algorithm>
#include <numeric>

#include "ccp/algorithms.hpp"
#include "ccp/error.hpp"
#include "ccp/rankops.hpp"

namespace ccp {

LiftedPoint lift_point(const ProblemInstance& instance, const VectorXd& x, double feas_tol) {
  const ScenarioValues sv = scenario_values(instance, x);
  const RankFunctionals r = rank_functionals(sv.values, instance.m());
  if (r.phi > feas_tol) {
    throw Error(ErrorCode::kPrecondition,
                "lift_point: point violates the chance constraint (phi = " +
                    std::to_string(r.phi) + ")");
  }
  const auto S = static_cast<Eigen::Index>(instance.S());
  // The S - m smallest values form the kept set; ties go to the smaller index.
  std::vector<std::size_t> order(instance.S());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sv.values(static_cast<Eigen::Index>(a)) < sv.values(static_cast<Eigen::Index>(b));
  });
  LiftedPoint lp;
  lp.x = x;
  lp.z = VectorXd::Zero(S);
  lp.y = sv.values.cwiseMax(0.0);
  for (std::size_t k = 0; k < instance.risk.required(); ++k) {
    const auto s = static_cast<Eigen::Index>(order[k]);
    lp.z(s) = 1.0;
    lp.y(s) = 0.0;
  }
  return lp;
}

StrongCertificate check_strong_stationarity(const ProblemInstance& instance,
                                            const LiftedPoint& point, double tol,
                                            SubproblemSolver* solver) {
  const auto S = static_cast<Eigen::Index>(instance.S());
  if (point.y.size() != S || point.z.size() != S ||
      static_cast<std::size_t>(point.x.size()) != instance.dim()) {
    throw Error(ErrorCode::kDimension, "strong stationarity: point has wrong dimensions");
  }
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "strong stationarity: tol must be > 0");
  const double V = point.y.dot(point.z);
  if (V > tol) {
    throw Error(ErrorCode::kPrecondition,
                "strong stationarity: V(y, z) = " + std::to_string(V) + " exceeds tol");
  }
  StrongCertificate cert;
  for (Eigen::Index s = 0; s < S; ++s) {
    const bool y0 = point.y(s) <= tol;
    const bool z0 = point.z(s) <= tol;
    const auto idx = static_cast<std::size_t>(s);
    if (y0 && !z0) cert.index_y.push_back(idx);
    else if (z0 && !y0) cert.index_z.push_back(idx);
    else if (y0 && z0) cert.index_0.push_back(idx);
  }
  // Fixing y = 0 on index_y forces g_s(x) <= 0 there; every other scenario
  // keeps a free y_s >= 0, and z = 1 off index_z stays inside C.
  SubproblemSolver local;
  SubproblemSolver& engine = solver != nullptr ? *solver : local;
  const auto relaxed = solve_restricted(instance, cert.index_y, engine, 1e-9);
  cert.point_value = instance.objective.value(point.x);
  cert.relaxed_value = relaxed ? relaxed->objective_value : kInf;
  cert.positive = cert.point_value <= cert.relaxed_value + tol;
  return cert;
}

bool check_strict_gap(const ProblemInstance& instance, const VectorXd& x, double strict_tol) {
  const VectorXd psi = scenario_values(instance, x).values.cwiseMax(0.0);
  std::vector<double> sorted(psi.data(), psi.data() + psi.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t S = instance.S();
  const std::size_t m = instance.m();
  if (sorted[S - m - 1] > strict_tol) return false;
  if (m == 0) return true;
  return sorted[S - m] > strict_tol;
}

}  // namespace ccp
