#include <algorithm>
#include <limits>
#include <numeric>

#include "ccp/error.hpp"
#include "ccp/rankops.hpp"

namespace ccp {
namespace {

void check_dim(const ProblemInstance& instance, const VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != instance.dim()) {
    throw Error(ErrorCode::kDimension,
                "point has length " + std::to_string(x.size()) + ", instance has d=" +
                    std::to_string(instance.dim()));
  }
}

std::vector<double> sorted_copy(const VectorXd& y) {
  std::vector<double> v(y.data(), y.data() + y.size());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

ScenarioValues scenario_values(const ProblemInstance& instance, const VectorXd& x) {
  check_dim(instance, x);
  const ScenarioSet& sc = instance.scenarios;
  ScenarioValues out;
  out.values.resize(static_cast<Eigen::Index>(sc.S));
  out.argmax_piece.assign(sc.S, 0);
  for (std::size_t s = 0; s < sc.S; ++s) {
    double best = sc.piece(s, 0).value(x);
    for (std::size_t i = 1; i < sc.I; ++i) {
      const double v = sc.piece(s, i).value(x);
      if (v > best) {
        best = v;
        out.argmax_piece[s] = i;
      }
    }
    out.values(static_cast<Eigen::Index>(s)) = best;
  }
  return out;
}

RankFunctionals rank_functionals(const VectorXd& values, std::size_t m) {
  const auto S = static_cast<std::size_t>(values.size());
  if (S == 0 || m >= S) {
    throw Error(ErrorCode::kInvalidArgument, "rank functionals need 0 <= m < S");
  }
  const std::vector<double> v = sorted_copy(values);
  RankFunctionals r;
  for (std::size_t k = 0; k < m; ++k) r.G2 += v[S - 1 - k];
  r.phi = v[S - m - 1];
  r.G1 = r.G2 + r.phi;
  return r;
}

RankFunctionals rank_functionals(const ScenarioValues& values, const RiskSpec& risk) {
  if (static_cast<std::size_t>(values.values.size()) != risk.S()) {
    throw Error(ErrorCode::kDimension, "scenario values do not match the risk spec");
  }
  return rank_functionals(values.values, risk.m());
}

double top_m_sum(const VectorXd& y, std::size_t m) {
  if (m > static_cast<std::size_t>(y.size())) {
    throw Error(ErrorCode::kInvalidArgument, "top_m_sum: m exceeds the vector length");
  }
  const std::vector<double> v = sorted_copy(y);
  double sum = 0.0;
  for (std::size_t k = 0; k < m; ++k) sum += v[v.size() - 1 - k];
  return sum;
}

std::vector<std::size_t> top_m_indices(const VectorXd& y, std::size_t m) {
  const auto n = static_cast<std::size_t>(y.size());
  if (m > n) throw Error(ErrorCode::kInvalidArgument, "top_m_indices: m exceeds length");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&y](std::size_t a, std::size_t b) {
    return y(static_cast<Eigen::Index>(a)) > y(static_cast<Eigen::Index>(b));
  });
  idx.resize(m);
  return idx;
}

double order_statistic(const VectorXd& y, std::size_t k) {
  if (k < 1 || k > static_cast<std::size_t>(y.size())) {
    throw Error(ErrorCode::kInvalidArgument, "order_statistic: k out of range");
  }
  return sorted_copy(y)[k - 1];
}

double cvar_dual_min(const VectorXd& y, std::size_t k) {
  // Piecewise linear and convex in eta, so the minimum sits on a breakpoint
  // When k == 0 the infimum is approached as eta -> +inf and equals 0.
  if (k == 0) return 0.0;
  if (k > static_cast<std::size_t>(y.size())) {
    throw Error(ErrorCode::kInvalidArgument, "cvar_dual_min: k exceeds the vector length");
  }
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < y.size(); ++s) {
    const double eta = y(s);
    const double v = static_cast<double>(k) * eta + (y.array() - eta).max(0.0).sum();
    best = std::min(best, v);
  }
  return best;
}

VectorXd subgradient_G2(const ProblemInstance& instance, const VectorXd& x) {
  const ScenarioValues sv = scenario_values(instance, x);
  VectorXd n = VectorXd::Zero(x.size());
  for (std::size_t s : top_m_indices(sv.values, instance.m())) {
    n += instance.scenarios.piece(s, sv.argmax_piece[s]).gradient(x);
  }
  return n;
}

VectorXd project_onto_C(const VectorXd& v, std::size_t m) {
  const auto S = static_cast<std::size_t>(v.size());
  if (S == 0 || m >= S) throw Error(ErrorCode::kInvalidArgument, "project_onto_C: need 0 <= m < S");
  const double target = static_cast<double>(S - m);
  VectorXd z = v.cwiseMax(0.0).cwiseMin(1.0);
  double f = z.sum();
  if (f >= target) return z;

  // f(lambda) = sum clip(v + lambda, 0, 1) is nondecreasing and piecewise
  // linear; walk its breakpoints from lambda = 0 with an incremental slope.
  std::vector<std::pair<double, int>> events;
  events.reserve(2 * S);
  double slope = 0.0;
  for (Eigen::Index s = 0; s < v.size(); ++s) {
    const double lo = -v(s), hi = 1.0 - v(s);
    if (lo > 0.0) events.emplace_back(lo, +1);
    if (hi > 0.0) events.emplace_back(hi, -1);
    if (lo <= 0.0 && hi > 0.0) slope += 1.0;
  }
  std::sort(events.begin(), events.end());
  double lambda = 0.0;
  double found = -1.0;
  for (const auto& [pos, delta] : events) {
    if (slope > 0.0 && f + slope * (pos - lambda) >= target) {
      found = lambda + (target - f) / slope;
      break;
    }
    f += slope * (pos - lambda);
    lambda = pos;
    slope += delta;
  }
  if (found < 0.0) found = lambda;  // only reachable through rounding at the last breakpoint
  return (v.array() + found).max(0.0).min(1.0).matrix();
}

bool in_C(const VectorXd& z, std::size_t m, double tol) {
  const auto S = static_cast<std::size_t>(z.size());
  if (m >= S) return false;
  if ((z.array() < -tol).any() || (z.array() > 1.0 + tol).any()) return false;
  return z.sum() >= static_cast<double>(S - m) - tol;
}

double empirical_probability(const ProblemInstance& instance, const VectorXd& x,
                             double feas_tol) {
  const ScenarioValues sv = scenario_values(instance, x);
  const auto ok = (sv.values.array() <= feas_tol).count();
  return static_cast<double>(ok) / static_cast<double>(instance.S());
}

double complementarity(const VectorXd& y, const VectorXd& z) {
  if (y.size() != z.size()) throw Error(ErrorCode::kDimension, "V(y, z): length mismatch");
  return y.dot(z);
}

}  // namespace ccp
