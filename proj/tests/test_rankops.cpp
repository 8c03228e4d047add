#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "ccp/error.hpp"
#include "ccp/rankops.hpp"

using namespace ccp;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

VectorXd at(double x) { return VectorXd::Constant(1, x); }

// max <u, y> over {0 <= u <= 1, sum u <= m}: the optimum sits on a vertex,
// i.e. u is a 0/1 vector with at most m ones.
double lp_vertex_oracle(const VectorXd& y, std::size_t m) {
  const int S = static_cast<int>(y.size());
  double best = 0.0;
  for (int mask = 0; mask < (1 << S); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) > m) continue;
    double v = 0.0;
    for (int s = 0; s < S; ++s)
      if (mask & (1 << s)) v += y(s);
    best = std::max(best, v);
  }
  return best;
}

// Duplicated scenarios b = (0.1, 0.1) plus a slack one.
ProblemInstance duplicated() {
  auto inst = reference_t1();
  inst.scenarios.S = 2;
  inst.scenarios.pieces = {ConstraintPiece::affine(VectorXd::Constant(1, 1.0), -0.1),
                           ConstraintPiece::affine(VectorXd::Constant(1, 2.0), -0.1)};
  inst.risk = RiskSpec(0.5, 2);
  return inst;
}

}  // namespace

TEST_CASE("scenario values on the fixture") {
  const auto v = scenario_values(reference_t1(), at(0.5));
  const VectorXd expect = vec({0.4, 0.3, 0.2, -0.4, -0.5});
  CHECK((v.values - expect).cwiseAbs().maxCoeff() < 1e-15);
  for (auto a : v.argmax_piece) CHECK(a == 0);
}

TEST_CASE("two-scenario fixture is zero at the origin") {
  const auto v = scenario_values(reference_example1(), at(0.0));
  CHECK(v.values(0) == 0.0);
  CHECK(v.values(1) == 0.0);
  // Both pieces tie at zero; the lower index wins.
  CHECK(v.argmax_piece[0] == 0);
  CHECK(v.argmax_piece[1] == 0);
}

TEST_CASE("identical pieces resolve to the lower index") {
  auto inst = reference_t1();
  inst.scenarios.I = 2;
  std::vector<ConstraintPiece> pieces;
  for (std::size_t s = 0; s < 5; ++s) {
    pieces.push_back(inst.scenarios.pieces[s]);
    pieces.push_back(inst.scenarios.pieces[s]);
  }
  inst.scenarios.pieces = pieces;
  const auto v = scenario_values(inst, at(0.3));
  for (auto a : v.argmax_piece) CHECK(a == 0);
}

TEST_CASE("scenario values reject a wrong dimension") {
  CHECK_THROWS_AS(scenario_values(reference_t1(), VectorXd::Zero(2)), Error);
}

TEST_CASE("rank functionals on the fixture") {
  const auto t1 = reference_t1();
  const auto rf = rank_functionals(scenario_values(t1, at(0.5)), t1.risk);
  CHECK(rf.G1 == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(rf.G2 == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(rf.phi == doctest::Approx(0.3).epsilon(1e-14));

  const auto ex = rank_functionals(scenario_values(reference_example1(), at(0.0)).values, 1);
  CHECK(ex.G1 == 0.0);
  CHECK(ex.G2 == 0.0);
  CHECK(ex.phi == 0.0);

  const auto m0 = rank_functionals(scenario_values(t1, at(0.2)).values, 0);
  CHECK(m0.G2 == 0.0);
  CHECK(m0.phi == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("top-m sums") {
  CHECK(top_m_sum(vec({1, 3, 2}), 2) == 5.0);
  CHECK(top_m_sum(vec({-1, -2}), 1) == -1.0);
  CHECK(top_m_sum(vec({1, 2}), 0) == 0.0);
  CHECK(top_m_sum(vec({1, 2, 4}), 3) == 7.0);
  CHECK_THROWS_AS(top_m_sum(vec({1, 2}), 3), Error);

  std::mt19937_64 g(7);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int S = 1 + static_cast<int>(g() % 8);
    VectorXd y(S);
    for (int s = 0; s < S; ++s) y(s) = N(g);
    const std::size_t m = g() % (S + 1);
    // The LP oracle allows fewer than m picks, so compare with nonnegative
    // parts when entries can be negative.
    VectorXd yp = y.cwiseMax(0.0);
    CHECK(top_m_sum(yp, m) == doctest::Approx(lp_vertex_oracle(yp, m)).epsilon(1e-12));
  }
}

TEST_CASE("top-m indices follow the tie rule") {
  const auto idx = top_m_indices(vec({1, 3, 3, 2}), 3);
  REQUIRE(idx.size() == 3);
  CHECK(idx[0] == 1);
  CHECK(idx[1] == 2);
  CHECK(idx[2] == 3);
}

TEST_CASE("order statistic and dual minimisation") {
  const VectorXd y = vec({0.4, -0.1, 0.9, 0.2});
  CHECK(order_statistic(y, 1) == -0.1);
  CHECK(order_statistic(y, 4) == 0.9);
  CHECK(cvar_dual_min(y, 2) == doctest::Approx(1.3).epsilon(1e-14));
  CHECK(cvar_dual_min(y, 0) == doctest::Approx(0.0));
}

TEST_CASE("subgradient selection") {
  const auto t1 = reference_t1();
  CHECK(subgradient_G2(t1, at(0.5))(0) == doctest::Approx(1.0));

  // Scenario values tie at x = 0.1; scenario 0 comes first and has slope 1.
  CHECK(subgradient_G2(duplicated(), at(0.0))(0) == doctest::Approx(1.0));

  auto quad = reference_t1();
  quad.scenarios.pieces[0].quad = VectorXd::Constant(1, 1.0);
  quad.scenarios.pieces[0].lin = VectorXd::Zero(1);
  quad.scenarios.pieces[0].offset = 0.0;
  // g_0(3) = 9 is the largest, so its derivative 2 * 3 is returned.
  CHECK(subgradient_G2(quad, at(3.0))(0) == doctest::Approx(6.0));
}

TEST_CASE("projection onto C examples") {
  const VectorXd a = project_onto_C(vec({0.5, 0.5, 0.5}), 1);
  for (int i = 0; i < 3; ++i) CHECK(a(i) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(project_onto_C(vec({1, 1, 0.5}), 1) == vec({1, 1, 0.5}));
  const VectorXd c = project_onto_C(vec({1.2, 0.7, -0.3}), 1);
  CHECK((c - vec({1, 1, 0})).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(in_C(c, 1, 1e-10));
  CHECK_FALSE(in_C(vec({0, 0, 1}), 1, 1e-10));
  CHECK_THROWS_AS(project_onto_C(vec({0.5}), 1), Error);
}

// Dense lambda scan: sum clip(v + lambda) is continuous and nondecreasing,
// so the smallest lambda on a fine grid reaching S - m brackets the answer.
TEST_CASE("projection matches a dense lambda scan") {
  std::mt19937_64 g(99);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int S = 2 + static_cast<int>(g() % 6);
    const std::size_t m = g() % S;
    VectorXd v(S);
    for (int s = 0; s < S; ++s) v(s) = N(g);
    const VectorXd p = project_onto_C(v, m);
    const double need = static_cast<double>(S - static_cast<int>(m));
    if (v.cwiseMax(0.0).cwiseMin(1.0).sum() >= need) {
      CHECK((p - v.cwiseMax(0.0).cwiseMin(1.0)).cwiseAbs().maxCoeff() < 1e-14);
      continue;
    }
    double lam = 0.0;
    while ((v.array() + lam).max(0.0).min(1.0).sum() < need) lam += 1e-6;
    const VectorXd scan = (v.array() + lam).max(0.0).min(1.0).matrix();
    CHECK((p - scan).cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("empirical probability and complementarity") {
  const auto t1 = reference_t1();
  CHECK(empirical_probability(t1, at(0.2), 1e-9) == doctest::Approx(0.8));
  CHECK(empirical_probability(t1, at(0.05), 0.0) == doctest::Approx(1.0));
  // g(1) = (0.9, 0.8, 0.7, 0.1, 0.0): only the last scenario holds.
  CHECK(empirical_probability(t1, at(1.0), 0.0) == doctest::Approx(0.2));
  CHECK(complementarity(vec({1, 2}), vec({0.5, 0.25})) == doctest::Approx(1.0));
}
