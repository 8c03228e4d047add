#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ccp/algorithms.hpp"
#include "ccp/error.hpp"
#include "ccp/rankops.hpp"

using namespace ccp;

namespace {

VectorXd at(double x) { return VectorXd::Constant(1, x); }

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

PenaltySchedule sched(double sigma0, double beta, double rho) {
  PenaltySchedule s;
  s.sigma0 = sigma0;
  s.beta = beta;
  s.rho = rho;
  return s;
}

// Fixture with alpha small enough that m = 0.
ProblemInstance t1_m0() { return reference_t1(0.1); }

// Random d=2 LP with S=8 and m=2 on the unit box.
ProblemInstance random_lp(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  ProblemInstance p;
  p.name = "lp";
  p.objective.Q = MatrixXd::Zero(2, 2);
  p.objective.c = -(VectorXd::Ones(2) + VectorXd::Random(2).cwiseAbs());
  p.region.A = MatrixXd::Zero(0, 2);
  p.region.b = VectorXd(0);
  p.region.E = MatrixXd::Zero(0, 2);
  p.region.e = VectorXd(0);
  p.region.lower = VectorXd::Zero(2);
  p.region.upper = VectorXd::Ones(2);
  p.scenarios.S = 8;
  p.scenarios.I = 1;
  for (int s = 0; s < 8; ++s) {
    p.scenarios.pieces.push_back(
        ConstraintPiece::affine(vec({U(g) + 0.1, U(g) + 0.1}), -(0.3 + U(g))));
  }
  p.risk = RiskSpec(0.25, 8);
  return p;
}

}  // namespace

TEST_CASE("schedule validation") {
  CHECK_NOTHROW(PenaltySchedule::lifted_defaults().check());
  CHECK_THROWS_AS(sched(0.0, 4, 1e-4).check(), Error);
  CHECK_THROWS_AS(sched(1e-3, 1.0, 1e-4).check(), Error);
  CHECK_THROWS_AS(sched(1e-3, 2.0, -1.0).check(), Error);
  const auto lifted = PenaltySchedule::lifted_defaults();
  CHECK(lifted.sigma0 == 5e-3);
  CHECK(lifted.beta == 2.0);
  CHECK(lifted.rho == 1e-4);
  CHECK(PenaltySchedule::primal_defaults(reference_t1()).rho == 0.0);
  const auto norm = generate_instance(Family::kNorm, {{"d", 3}, {"mcons", 2}, {"S", 6}}, 1);
  CHECK(PenaltySchedule::primal_defaults(norm).rho == 1e-3);
}

TEST_CASE("primal method on the fixture from an infeasible start") {
  const auto r = pendc_primal(reference_t1(), sched(3e-3, 1.5, 0.0), at(1.0));
  CHECK(r.feasible());
  CHECK(r.fval == doctest::Approx(-0.2).epsilon(1e-4));
  CHECK(r.empirical_prob == doctest::Approx(0.8));
  CHECK(r.algorithm == "pendc-p");
  CHECK_FALSE(r.sigma_trace.empty());

  const auto r0 = pendc_primal(t1_m0(), sched(3e-3, 1.5, 0.0), at(1.0));
  CHECK(r0.feasible());
  CHECK(r0.fval == doctest::Approx(-0.1).epsilon(1e-4));
}

TEST_CASE("primal method descends on quadratic pieces") {
  const auto inst = generate_instance(Family::kNorm, {{"d", 2}, {"mcons", 2}, {"S", 6}}, 4);
  const auto s = PenaltySchedule::primal_defaults(inst);
  const auto r = pendc_primal(inst, s, default_start(inst));
  const std::size_t k = inst.S() - inst.m();
  auto merit = [&](const InnerRecord& rec) {
    const double phi = order_statistic(scenario_values(inst, rec.x).values, k);
    return inst.objective.value(rec.x) + rec.sigma * std::max(phi, 0.0);
  };
  for (std::size_t i = 1; i < r.inner_trace.size(); ++i) {
    if (r.inner_trace[i].outer != r.inner_trace[i - 1].outer) continue;
    CHECK(merit(r.inner_trace[i]) <= merit(r.inner_trace[i - 1]) + 1e-8 + s.subproblem_tol);
  }
}

TEST_CASE("lifted method on the fixture") {
  const auto r = pendc_lifted(reference_t1(), sched(5e-3, 4, 1e-4));
  CHECK(r.feasible());
  CHECK(r.fval == doctest::Approx(-0.2).epsilon(1e-4));
  CHECK(r.penalty_residual <= 1e-8);
  CHECK(r.algorithm == "pendc-l");
  CHECK(r.z.size() == 5);
  CHECK(in_C(r.z, 1, 1e-10));
}

TEST_CASE("vertex selector rule zeroes the largest y") {
  SubproblemSolver solver;
  const auto t1 = reference_t1();
  // At sigma = 10 with all ones the inner solve lands on x = 0.1, y = 0.
  const auto xy = inner_xy_solve(t1, VectorXd::Ones(5), 10.0, solver, 1e-10);
  CHECK(xy.x(0) == doctest::Approx(0.1).epsilon(1e-7));
  CHECK(xy.y.cwiseAbs().maxCoeff() < 1e-7);

  // Freeing scenario 0 lets x rise to the next bound.
  const auto xy2 = inner_xy_solve(t1, vec({0, 1, 1, 1, 1}), 10.0, solver, 1e-10);
  CHECK(xy2.x(0) == doctest::Approx(0.2).epsilon(1e-7));
  CHECK(xy2.y(0) == doctest::Approx(0.1).epsilon(1e-7));

  // With y = (0.1, 0, ...) the rho = 0 update drops exactly scenario 0.
  const VectorXd z = update_selector(VectorXd::Ones(5), xy2.y, 10.0, 0.0, 1);
  CHECK(z == vec({0, 1, 1, 1, 1}));

  // Ties go to the smaller index.
  CHECK(update_selector(VectorXd::Ones(3), vec({1, 1, 0}), 1.0, 0.0, 1) == vec({0, 1, 1}));
}

TEST_CASE("projected selector update arithmetic") {
  const VectorXd z = update_selector(vec({1, 1, 0.5}), vec({0, 0, 2}), 1.0, 1.0, 1);
  CHECK((z - vec({1, 1, 0})).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("inner solve pins y to the positive part of g") {
  const auto inst = generate_instance(Family::kTransport, {{"S", 6}}, 3);
  SubproblemSolver solver;
  VectorXd z = VectorXd::Ones(6);
  z(2) = 0.0;
  const auto xy = inner_xy_solve(inst, z, 1.0, solver, 1e-8);
  const VectorXd g = scenario_values(inst, xy.x).values;
  for (Eigen::Index s = 0; s < 6; ++s) CHECK(xy.y(s) == doctest::Approx(std::max(g(s), 0.0)));
}

TEST_CASE("lifted method with rho = 0 stalls finitely") {
  auto s = PenaltySchedule::lifted_defaults();
  s.rho = 0.0;
  const auto inst = generate_instance(Family::kTransport, {{"S", 16}}, 2);
  const auto r = pendc_lifted(inst, s);
  for (std::size_t i = 0; i < r.sigma_trace.size(); ++i) {
    CHECK(r.sigma_trace[i].inner_iterations <= 50);
    if (i >= 2) CHECK(r.sigma_trace[i].stalled);
  }
  for (const auto& rec : r.inner_trace) {
    for (Eigen::Index k = 0; k < rec.z.size(); ++k) {
      CHECK((rec.z(k) == 0.0 || rec.z(k) == 1.0));
    }
  }
}

TEST_CASE("dca baseline") {
  const auto t1 = reference_t1();
  const auto r = dca_baseline(t1, PenaltySchedule::lifted_defaults(), at(0.05));
  CHECK(r.feasible());
  CHECK(r.fval <= -0.05);
  CHECK(r.fval >= -0.2 - 1e-9);
  CHECK(rank_functionals(scenario_values(t1, r.x_best).values, 1).phi <= 1e-8);
  for (std::size_t i = 1; i < r.inner_trace.size(); ++i) {
    CHECK(r.inner_trace[i].objective <= r.inner_trace[i - 1].objective + 1e-9);
  }

  try {
    dca_baseline(t1, PenaltySchedule::lifted_defaults(), at(0.5));
    FAIL("expected an infeasible start");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInfeasibleStart);
  }

  // Already optimal: one iteration, unchanged point.
  const auto fixed = dca_baseline(t1, PenaltySchedule::lifted_defaults(), at(0.2));
  CHECK(fixed.x_best(0) == doctest::Approx(0.2).epsilon(1e-7));
  CHECK(fixed.fval == doctest::Approx(-0.2).epsilon(1e-7));
}

TEST_CASE("cvar baseline") {
  const auto r = cvar_baseline(reference_t1());
  CHECK(r.feasible());
  CHECK(r.x_best(0) == doctest::Approx(0.15).epsilon(1e-6));
  CHECK(r.fval == doctest::Approx(-0.15).epsilon(1e-6));
  // g(0.15) = (0.05, -0.05, ...): scenario 0 stays violated.
  CHECK(r.empirical_prob == doctest::Approx(0.8));
  CHECK(r.empirical_prob >= 0.8);

  const auto r0 = cvar_baseline(t1_m0());
  CHECK(r0.x_best(0) == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("enumeration oracle") {
  const auto r = enumeration_oracle(reference_t1());
  CHECK(r.x_best(0) == doctest::Approx(0.2).epsilon(1e-7));
  CHECK(r.fval == doctest::Approx(-0.2).epsilon(1e-7));
  REQUIRE(r.drop_set.size() == 1);
  CHECK(r.drop_set[0] == 0);
  CHECK(r.optimal_drop_sets == 1);

  CHECK(enumeration_oracle(t1_m0()).x_best(0) == doctest::Approx(0.1).epsilon(1e-7));

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = random_lp(seed);
    const auto o = enumeration_oracle(inst);
    const auto c = cvar_baseline(inst);
    if (c.feasible()) CHECK(o.fval <= c.fval + 1e-9);
    const auto l = pendc_lifted(inst, PenaltySchedule::lifted_defaults());
    // Lifted points are accepted with g <= feas_tol, so they may undercut the
    // exact optimum by an amount of that order.
    if (l.feasible()) CHECK(o.fval <= l.fval + 1e-6);
  }

  CHECK(drop_set_count(5, 1) == 5);
  CHECK(drop_set_count(12, 2) == 66);
  try {
    enumeration_oracle(reference_t1(), 3);
    FAIL("expected a budget error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBudget);
  }
}

TEST_CASE("lifting feasible points") {
  const auto t1 = reference_t1();
  const auto p = lift_point(t1, at(0.2));
  CHECK(p.z == vec({0, 1, 1, 1, 1}));
  CHECK(p.y(0) == doctest::Approx(0.1));
  CHECK(p.y.tail(4).cwiseAbs().maxCoeff() == 0.0);
  CHECK(complementarity(p.y, p.z) == 0.0);

  const auto all = lift_point(t1, at(0.05));
  CHECK(all.y.cwiseAbs().maxCoeff() == 0.0);

  const auto ex = lift_point(reference_example1(), at(0.0));
  CHECK(ex.z == vec({1, 0}));
  CHECK(ex.y == vec({0, 0}));

  try {
    lift_point(t1, at(0.5));
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPrecondition);
  }
}

TEST_CASE("strong stationarity certificates") {
  const auto ex = reference_example1(1.0);
  const LiftedPoint spurious{VectorXd::Zero(1), VectorXd::Zero(2), VectorXd::Ones(2)};
  const auto c = check_strong_stationarity(ex, spurious, 1e-9);
  CHECK(c.positive);
  CHECK(c.index_y.size() == 2);

  const auto t1 = reference_t1();
  CHECK(check_strong_stationarity(t1, lift_point(t1, at(0.2)), 1e-8).positive);
  const auto neg = check_strong_stationarity(t1, lift_point(t1, at(0.15)), 1e-8);
  CHECK_FALSE(neg.positive);
  CHECK(neg.relaxed_value == doctest::Approx(-0.2).epsilon(1e-6));
}

TEST_CASE("strict gap") {
  const auto t1 = reference_t1();
  CHECK(check_strict_gap(t1, at(0.2)));
  CHECK_FALSE(check_strict_gap(reference_example1(), at(0.0)));
  CHECK_FALSE(check_strict_gap(t1, at(0.25)));
}

TEST_CASE("reports carry provenance and certificates") {
  const auto t1 = reference_t1();
  const auto r = pendc_lifted(t1, PenaltySchedule::lifted_defaults());
  CHECK(r.instance_hash == instance_hash(t1));
  REQUIRE(r.strong.has_value());
  CHECK(r.strong->positive);
  CHECK(r.status == ReportStatus::kFeasibleStationary);
  REQUIRE(r.strict_gap.has_value());
  CHECK(*r.strict_gap);
  CHECK(r.wall_time_s >= 0.0);

  SolveOptions quiet;
  quiet.certify = false;
  quiet.record_iterates = false;
  const auto q = pendc_lifted(t1, PenaltySchedule::lifted_defaults(), VectorXd(), quiet);
  CHECK_FALSE(q.strong.has_value());
  CHECK(q.inner_trace.empty());
}

TEST_CASE("outer budget exhaustion is reported") {
  auto s = PenaltySchedule::lifted_defaults();
  s.sigma0 = 1e-9;
  s.outer_max = 1;
  const auto r = pendc_lifted(reference_t1(), s);
  CHECK(r.status == ReportStatus::kBudgetExhausted);
  CHECK_FALSE(r.feasible());
}

TEST_CASE("replays are deterministic") {
  const auto inst = generate_instance(Family::kTransport, {{"S", 10}}, 9);
  const auto a = pendc_lifted(inst, PenaltySchedule::lifted_defaults());
  const auto b = pendc_lifted(inst, PenaltySchedule::lifted_defaults());
  CHECK(a.fval == b.fval);
  CHECK(a.subproblems_solved == b.subproblems_solved);
  CHECK(random_start(inst, 4) == random_start(inst, 4));
  CHECK(inst.region.contains(random_start(inst, 4), 1e-7));
}
