#ifndef CCP_RANKOPS_HPP
#define CCP_RANKOPS_HPP

#include <cstddef>
#include <vector>

#include "ccp/model.hpp"

namespace ccp {

/// g_s(x) for every scenario plus the smallest piece index attaining it.
struct ScenarioValues {
  VectorXd values;
  std::vector<std::size_t> argmax_piece;
};

/// G1 = sum of the m+1 largest values, G2 = sum of the m largest,
/// phi = the (S-m)-th smallest value (equal to G1 - G2).
struct RankFunctionals {
  double G1 = 0.0;
  double G2 = 0.0;
  double phi = 0.0;
};

ScenarioValues scenario_values(const ProblemInstance& instance, const VectorXd& x);

RankFunctionals rank_functionals(const VectorXd& values, std::size_t m);
RankFunctionals rank_functionals(const ScenarioValues& values, const RiskSpec& risk);

/// Sum of the m largest entries; throws when m > size.
double top_m_sum(const VectorXd& y, std::size_t m);

/// Indices of the m largest entries, largest first; ties go to the smaller index.
std::vector<std::size_t> top_m_indices(const VectorXd& y, std::size_t m);

/// k-th smallest entry, 1-based.
double order_statistic(const VectorXd& y, std::size_t k);

/// min over eta of k*eta + sum_s [y_s - eta]_+, evaluated on the breakpoints.
double cvar_dual_min(const VectorXd& y, std::size_t k);

/// One element of the subdifferential of G2 at x.
VectorXd subgradient_G2(const ProblemInstance& instance, const VectorXd& x);

/// Euclidean projection onto C = {0 <= z <= 1, sum z >= S - m}.
VectorXd project_onto_C(const VectorXd& v, std::size_t m);

bool in_C(const VectorXd& z, std::size_t m, double tol);

/// Fraction of scenarios with g_s(x) <= feas_tol.
double empirical_probability(const ProblemInstance& instance, const VectorXd& x,
                             double feas_tol = 1e-6);

/// V(y, z) = sum_s y_s z_s.
double complementarity(const VectorXd& y, const VectorXd& z);

}  // namespace ccp

#endif  // CCP_RANKOPS_HPP
