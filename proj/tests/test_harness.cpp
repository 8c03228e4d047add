#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ccp/error.hpp"
#include "ccp/harness.hpp"

using namespace ccp;
namespace fs = std::filesystem;

namespace {

ErrorCode plan_error(const std::string& text) {
  try {
    parse_plan(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected the plan to be rejected");
  return ErrorCode::kEngine;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ccp_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every column except the timing one.
std::string strip_time(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) {
    out << r.family << ' ' << r.S << ' ' << r.alpha << ' ' << r.algorithm << ' '
        << r.fval_mean << ' ' << r.prob_mean << ' ' << r.solved << '/' << r.runs << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("algorithm registry and override keys") {
  for (const char* id : {"pendc-p", "pendc-l", "dca", "cvar", "oracle"}) CHECK(is_algorithm(id));
  CHECK_FALSE(is_algorithm("simplex"));
  CHECK_NOTHROW(check_overrides("pendc-l", {{"sigma0", 1e-2}, {"beta", 2}}));
  CHECK_NOTHROW(check_overrides("cvar", {{"tol", 1e-8}}));
  CHECK_NOTHROW(check_overrides("oracle", {{"max_subsets", 100}}));
  CHECK_THROWS_AS(check_overrides("cvar", {{"sigma0", 1.0}}), Error);
  CHECK_THROWS_AS(check_overrides("dca", {{"beta", 2.0}}), Error);
  CHECK_THROWS_AS(check_overrides("pendc-p", {{"max_subsets", 2}}), Error);
}

TEST_CASE("plan parsing") {
  const auto plan = parse_plan(R"({
    "format": "csv",
    "entries": [
      {"id": "a", "algorithm": "pendc-l", "instance": "t1"},
      {"id": "b", "algorithm": "cvar", "family": "transport",
       "params": {"S": 12}, "repetitions": 3, "seed_base": 40}
    ]})");
  REQUIRE(plan.entries.size() == 2);
  CHECK(plan.format == TableFormat::kCsv);
  CHECK(plan.entries[0].source.builtin == "t1");
  CHECK(plan.entries[1].source.family == Family::kTransport);
  CHECK(plan.entries[1].repetitions == 3);
  CHECK(*plan.entries[1].seed_base == 40);

  CHECK(plan_error(R"({"entries": [], "colour": 1})") == ErrorCode::kParse);
  CHECK(plan_error(R"({"entries": [{"algorithm": "cvar", "instance": "t1", "x": 1}]})") ==
        ErrorCode::kParse);
  CHECK(plan_error(R"({"entries": [{"algorithm": "cvar"}]})") == ErrorCode::kInvalidArgument);
  CHECK(plan_error(R"({"entries": [{"algorithm": "cvar", "instance": "t1",
                                    "overrides": {"beta": 2}}]})") ==
        ErrorCode::kInvalidArgument);
  CHECK(plan_error(R"({"entries": [{"id": "x", "algorithm": "cvar", "instance": "t1"},
                                   {"id": "x", "algorithm": "cvar", "instance": "t1"}]})") ==
        ErrorCode::kInvalidArgument);
  CHECK(plan_error("[1, 2") == ErrorCode::kParse);
}

TEST_CASE("relative instance paths resolve against the plan directory") {
  const auto plan =
      parse_plan(R"({"entries": [{"algorithm": "cvar", "instance": "t1.json"}]})", "/data");
  CHECK(plan.entries[0].source.file == (fs::path("/data") / "t1.json").string());
}

TEST_CASE("an empty plan yields an empty table") {
  const auto result = run_benchmark(parse_plan(R"({"entries": []})"));
  CHECK(result.records.empty());
  CHECK(result.rows.empty());
  CHECK(format_table(result.rows, TableFormat::kCsv) ==
        "family,S,alpha,algorithm,fval_mean,time_mean_s,prob_mean,solved\n");
}

TEST_CASE("benchmark tables are deterministic apart from timing") {
  const std::string text = R"({"entries": [
      {"id": "l", "algorithm": "pendc-l", "family": "norm",
       "params": {"d": 3, "mcons": 2, "S": 10}, "repetitions": 2, "seed_base": 5},
      {"id": "c", "algorithm": "cvar", "family": "norm",
       "params": {"d": 3, "mcons": 2, "S": 10}, "repetitions": 2, "seed_base": 5}]})";
  const auto a = run_benchmark(parse_plan(text), 1);
  const auto b = run_benchmark(parse_plan(text), 3);
  CHECK(strip_time(a.rows) == strip_time(b.rows));
  REQUIRE(a.records.size() == 4);
  CHECK(a.records[0].environment.seed == 5);
  CHECK(a.records[1].environment.seed == 6);
  CHECK(a.records[0].instance_hash == a.records[2].instance_hash);
  CHECK(a.records[0].instance_hash != a.records[1].instance_hash);
}

TEST_CASE("seed base falls back to the environment") {
  ::setenv("CCP_PENDC_SEED", "17", 1);
  CHECK(default_seed_base() == 17);
  const auto r =
      run_benchmark(parse_plan(R"({"entries": [{"algorithm": "cvar", "family": "transport",
                                                "params": {"S": 6}, "repetitions": 2}]})"));
  CHECK(r.records[1].environment.seed == 18);
  ::setenv("CCP_PENDC_SEED", "abc", 1);
  CHECK_THROWS_AS(default_seed_base(), Error);
  ::unsetenv("CCP_PENDC_SEED");
  CHECK(default_seed_base() == 0);
}

TEST_CASE("incomplete rows print a slash") {
  RunRecord ok, failed;
  ok.family = failed.family = "t1";
  ok.S = failed.S = 5;
  ok.alpha = failed.alpha = 0.2;
  ok.algorithm = failed.algorithm = "dca";
  ok.ok = true;
  ok.report.status = ReportStatus::kFeasible;
  ok.report.fval = -0.2;
  ok.report.empirical_prob = 0.8;
  failed.ok = false;
  const auto rows = summarize({ok, failed});
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].complete());
  CHECK(format_table(rows, TableFormat::kCsv).find("dca,/,") != std::string::npos);
  const auto j = nlohmann::json::parse(format_table(rows, TableFormat::kStructured));
  CHECK(j["rows"][0]["fval_mean"].is_null());
  CHECK(j["rows"][0]["solved"] == 1);

  const auto full = summarize({ok, ok});
  CHECK(full[0].complete());
  CHECK(full[0].fval_mean == doctest::Approx(-0.2));
}

TEST_CASE("run records land in the output directory") {
  const fs::path dir = scratch_dir("out");
  const std::string text = R"({"output": ")" + dir.string() + R"(", "entries": [
      {"id": "t1 lifted", "algorithm": "pendc-l", "instance": "t1"}]})";
  const auto r = run_benchmark(parse_plan(text));
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].ok);
  CHECK(r.records[0].report.fval == doctest::Approx(-0.2).epsilon(1e-4));
  int json_files = 0;
  for (const auto& f : fs::directory_iterator(dir)) {
    if (f.path().extension() == ".json") {
      ++json_files;
      const auto j = nlohmann::json::parse(slurp(f.path()));
      CHECK(j.contains("environment"));
      CHECK(j["algorithm"] == "pendc-l");
    }
    CHECK(f.path().extension() != ".tmp");
  }
  CHECK(json_files == 1);
  fs::remove_all(dir);
}

TEST_CASE("oracle rows lower-bound every other algorithm") {
  const std::string text = R"({"entries": [
      {"id": "o", "algorithm": "oracle", "family": "transport", "params": {"S": 12},
       "repetitions": 2, "seed_base": 3},
      {"id": "l", "algorithm": "pendc-l", "family": "transport", "params": {"S": 12},
       "repetitions": 2, "seed_base": 3},
      {"id": "c", "algorithm": "cvar", "family": "transport", "params": {"S": 12},
       "repetitions": 2, "seed_base": 3}]})";
  const auto r = run_benchmark(parse_plan(text), 2);
  REQUIRE(r.rows.size() == 3);
  const TableRow& oracle = r.rows[0];
  const TableRow& lifted = r.rows[1];
  const TableRow& cvar = r.rows[2];
  REQUIRE(oracle.complete());
  REQUIRE(lifted.complete());
  // Other methods accept g <= 1e-6, so they may undercut the exact optimum
  // by about that much.
  CHECK(oracle.fval_mean <= lifted.fval_mean + 1e-6);
  if (cvar.complete()) {
    CHECK(oracle.fval_mean <= cvar.fval_mean + 1e-6);
    CHECK(lifted.fval_mean <= cvar.fval_mean + 1e-6);
  }
}

TEST_CASE("point checks") {
  const auto t1 = reference_t1();
  const auto c = check_point(t1, VectorXd::Constant(1, 0.2), VectorXd(), VectorXd());
  CHECK(c.chance_feasible);
  CHECK(c.phi == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.satisfied == 4);
  CHECK(c.required == 4);
  CHECK(c.strict_gap);
  REQUIRE(c.strong.has_value());
  CHECK(c.strong->positive);
  CHECK_FALSE(c.complementarity.has_value());

  const auto bad = check_point(t1, VectorXd::Constant(1, 0.5), VectorXd(), VectorXd());
  CHECK_FALSE(bad.chance_feasible);
  CHECK_FALSE(bad.strong.has_value());
  CHECK(bad.phi == doctest::Approx(0.3));

  VectorXd y = VectorXd::Zero(5), z = VectorXd::Ones(5);
  y(0) = 0.1;
  z(0) = 0.0;
  const auto lifted = check_point(t1, VectorXd::Constant(1, 0.2), y, z);
  REQUIRE(lifted.complementarity.has_value());
  CHECK(*lifted.complementarity == doctest::Approx(0.0));
  CHECK(*lifted.in_omega0);
  CHECK(*lifted.lower_bound_holds);

  const auto j = nlohmann::json::parse(point_check_to_json(c));
  CHECK(j["chance_feasible"] == true);
  CHECK_THROWS_AS(check_point(t1, VectorXd::Zero(2), VectorXd(), VectorXd()), Error);
}

TEST_CASE("points load from files and reports") {
  const fs::path dir = scratch_dir("points");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "p.json") << R"({"x": [0.2], "y": [0.1, 0, 0, 0, 0]})";
    std::ofstream(dir / "r.json") << R"({"x_best": [0.3]})";
    std::ofstream(dir / "bad.json") << R"({"q": 1})";
  }
  VectorXd x, y, z;
  load_point((dir / "p.json").string(), x, y, z);
  CHECK(x(0) == 0.2);
  CHECK(y.size() == 5);
  CHECK(z.size() == 0);
  load_point((dir / "r.json").string(), x, y, z);
  CHECK(x(0) == 0.3);
  CHECK_THROWS_AS(load_point((dir / "bad.json").string(), x, y, z), Error);
  CHECK_THROWS_AS(load_point((dir / "missing.json").string(), x, y, z), Error);
  fs::remove_all(dir);
}

TEST_CASE("run dispatch honours overrides and starts") {
  const auto t1 = reference_t1();
  RunRequest req;
  req.algorithm = "pendc-l";
  req.overrides = {{"sigma0", 5e-3}, {"beta", 4}, {"rho", 1e-4}};
  const auto r = run_algorithm(t1, req);
  CHECK(r.fval == doctest::Approx(-0.2).epsilon(1e-4));

  req.algorithm = "dca";
  req.overrides.clear();
  req.x0 = VectorXd::Constant(1, 0.5);
  try {
    run_algorithm(t1, req);
    FAIL("expected an infeasible start");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInfeasibleStart);
  }

  req.algorithm = "pendc-p";
  req.x0 = VectorXd();
  req.random_start = true;
  req.seed = 9;
  const auto a = run_algorithm(t1, req);
  const auto b = run_algorithm(t1, req);
  CHECK(a.x_best == b.x_best);

  req.algorithm = "cvar";
  req.overrides = {{"beta", 2}};
  CHECK_THROWS_AS(run_algorithm(t1, req), Error);

  const auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j["status"].is_string());
  CHECK(j.contains("x_best"));
}

TEST_CASE("atomic writes replace the target") {
  const fs::path dir = scratch_dir("atomic");
  fs::create_directories(dir);
  const std::string path = (dir / "f.txt").string();
  write_file_atomic(path, "one");
  write_file_atomic(path, "two");
  CHECK(slurp(path) == "two");
  CHECK_FALSE(fs::exists(path + ".tmp"));
  CHECK_THROWS_AS(write_file_atomic((dir / "no" / "f.txt").string(), "x"), Error);
  fs::remove_all(dir);
}
