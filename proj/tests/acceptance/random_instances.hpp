#ifndef CCP_TESTS_RANDOM_INSTANCES_HPP
#define CCP_TESTS_RANDOM_INSTANCES_HPP

#include <cstdint>
#include <random>
#include <string>

#include "ccp/model.hpp"

namespace ccp_test {

// Small affine-piece instance used by the oracle-equivalence criteria:
// d in {1,2,3}, S in [6,12], one or two pieces per scenario, m in {1,2}.
// Region is the unit box cut by sum x <= 0.8 d. Every fourth seed gets a
// PSD quadratic objective.
inline ccp::ProblemInstance random_affine(std::uint64_t seed) {
  using ccp::MatrixXd;
  using ccp::VectorXd;
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int d = 1 + static_cast<int>(seed % 3);
  const int S = 6 + static_cast<int>(g() % 7);
  const int I = 1 + static_cast<int>(g() % 2);
  const int m = 1 + static_cast<int>(g() % 2);
  const double alpha = (m + 0.5) / S;

  ccp::ProblemInstance p;
  p.name = "affine-" + std::to_string(seed);
  p.objective.Q = MatrixXd::Zero(d, d);
  if (seed % 4 == 0) {
    MatrixXd B(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) B(i, j) = U(g) - 0.5;
    p.objective.Q = 0.2 * B * B.transpose();
  }
  p.objective.c = VectorXd(d);
  for (int i = 0; i < d; ++i) p.objective.c(i) = -(0.5 + U(g));
  p.region.A = MatrixXd::Ones(1, d);
  p.region.b = VectorXd::Constant(1, 0.8 * d);
  p.region.E = MatrixXd::Zero(0, d);
  p.region.e = VectorXd(0);
  p.region.lower = VectorXd::Zero(d);
  p.region.upper = VectorXd::Ones(d);
  p.scenarios.S = S;
  p.scenarios.I = I;
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < I; ++i) {
      VectorXd a(d);
      for (int j = 0; j < d; ++j) a(j) = U(g) + 0.1;
      p.scenarios.pieces.push_back(ccp::ConstraintPiece::affine(a, -(0.2 + U(g))));
    }
  }
  p.risk = ccp::RiskSpec(alpha, S);
  return p;
}

inline constexpr std::uint64_t kAffineSeedBase = 1000;
inline constexpr int kAffineCount = 50;
inline constexpr int kNormCount = 10;

inline ccp::ProblemInstance norm_instance(int k) {
  return ccp::generate_instance(ccp::Family::kNorm,
                                {{"d", 4}, {"mcons", 3}, {"S", 10}, {"alpha", 0.1}},
                                static_cast<std::uint64_t>(k + 1));
}

}  // namespace ccp_test

#endif  // CCP_TESTS_RANDOM_INSTANCES_HPP
