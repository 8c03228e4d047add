// Command-line front end. Talks to the solver exclusively through ccp.h.
//
// Exit codes: 0 success, 1 usage or input error, 2 infeasible or budget
// outcome, 3 internal error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccp/ccp.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitOutcome = 2;
constexpr int kExitInternal = 3;

int exit_code_for(ccp_status st) {
  switch (st) {
    case CCP_OK:
      return kExitOk;
    case CCP_E_INFEASIBLE_START:
    case CCP_E_BUDGET:
    case CCP_E_PRECONDITION:
      return kExitOutcome;
    case CCP_E_ENGINE:
    case CCP_E_INTERNAL:
      return kExitInternal;
    default:
      return kExitUsage;
  }
}

int fail(ccp_status st) {
  std::cerr << "error (" << ccp_status_name(st) << "): " << ccp_last_error() << "\n";
  return exit_code_for(st);
}

struct InstanceDeleter {
  void operator()(ccp_instance* p) const { ccp_instance_free(p); }
};
struct ReportDeleter {
  void operator()(ccp_report* p) const { ccp_report_free(p); }
};
struct StringDeleter {
  void operator()(char* p) const { ccp_string_free(p); }
};
using InstancePtr = std::unique_ptr<ccp_instance, InstanceDeleter>;
using ReportPtr = std::unique_ptr<ccp_report, ReportDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

// "t1" and "example1" name builtins; anything else is a file path.
ccp_status open_instance(const std::string& spec, InstancePtr& out) {
  ccp_instance* raw = nullptr;
  ccp_status st = (spec == "t1" || spec == "example1")
                      ? ccp_instance_builtin(spec.c_str(), 0.0, &raw)
                      : ccp_instance_load(spec.c_str(), &raw);
  out.reset(raw);
  return st;
}

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) return false;
  f << text;
  if (text.empty() || text.back() != '\n') f << '\n';
  return static_cast<bool>(f);
}

// Emits text to the file when one is given, otherwise to stdout.
int emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text << "\n";
    return kExitOk;
  }
  if (!write_text(out_path, text)) {
    std::cerr << "error (io): cannot write " << out_path << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

struct KeyValues {
  std::vector<std::string> keys;
  std::vector<double> values;

  void add(const std::string& k, double v) {
    keys.push_back(k);
    values.push_back(v);
  }
  std::vector<const char*> c_keys() const {
    std::vector<const char*> out;
    for (const auto& k : keys) out.push_back(k.c_str());
    return out;
  }
};

// Parses repeated "key=value" options.
bool parse_pairs(const std::vector<std::string>& items, KeyValues& kv) {
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error (invalid_argument): expected key=value, got '" << item << "'\n";
      return false;
    }
    try {
      std::size_t used = 0;
      const std::string rhs = item.substr(eq + 1);
      const double v = std::stod(rhs, &used);
      if (used != rhs.size()) throw std::invalid_argument(rhs);
      kv.add(item.substr(0, eq), v);
    } catch (const std::exception&) {
      std::cerr << "error (invalid_argument): bad number in '" << item << "'\n";
      return false;
    }
  }
  return true;
}

// ------------------------------------------------------------------- gen

struct GenArgs {
  std::string family;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> params;
  std::map<std::string, std::optional<double>> named;
};

int run_gen(GenArgs& a) {
  KeyValues kv;
  for (const auto& [key, val] : a.named) {
    if (val) kv.add(key, *val);
  }
  if (!parse_pairs(a.params, kv)) return kExitUsage;
  const auto keys = kv.c_keys();
  ccp_instance* raw = nullptr;
  const ccp_status st = ccp_instance_generate(a.family.c_str(), keys.data(),
                                              kv.values.data(), kv.keys.size(), a.seed, &raw);
  InstancePtr inst(raw);
  if (st != CCP_OK) return fail(st);
  const ccp_status sst = ccp_instance_save(inst.get(), a.out.c_str());
  if (sst != CCP_OK) return fail(sst);
  char* hash = nullptr;
  ccp_instance_hash(inst.get(), &hash);
  StringPtr h(hash);
  std::cout << a.family << ": d=" << ccp_instance_dim(inst.get())
            << " S=" << ccp_instance_scenarios(inst.get())
            << " m=" << ccp_instance_budget(inst.get()) << " hash=" << (h ? h.get() : "")
            << " -> " << a.out << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- solve

struct SolveArgs {
  std::string instance;
  std::string algorithm = "pendc-l";
  std::vector<double> x0;
  std::uint64_t seed = 0;
  bool random_start = false;
  bool no_certify = false;
  bool iterates = false;
  std::string out;
  std::vector<std::string> set;
  std::map<std::string, std::optional<double>> named;
};

int finish_report(ccp_report* rep, bool iterates, const std::string& out) {
  char* json = nullptr;
  const ccp_status st = ccp_report_json(rep, iterates ? 1 : 0, &json);
  StringPtr j(json);
  if (st != CCP_OK) return fail(st);
  const ccp_report_status rs = ccp_report_get_status(rep);
  const int code = emit(out, j.get());
  if (code != kExitOk) return code;
  if (!out.empty()) {
    std::printf("status=%s fval=%.10g prob=%.6g time=%.3fs\n", ccp_report_status_name(rs),
                ccp_report_fval(rep), ccp_report_prob(rep), ccp_report_wall_time(rep));
  }
  const bool ok = rs == CCP_REPORT_FEASIBLE_STATIONARY || rs == CCP_REPORT_FEASIBLE;
  return ok ? kExitOk : kExitOutcome;
}

int run_solve(SolveArgs& a, const std::string& algorithm) {
  InstancePtr inst;
  ccp_status st = open_instance(a.instance, inst);
  if (st != CCP_OK) return fail(st);
  KeyValues kv;
  for (const auto& [key, val] : a.named) {
    if (val) kv.add(key, *val);
  }
  if (!parse_pairs(a.set, kv)) return kExitUsage;
  if (a.random_start) kv.add("random_start", 1.0);
  const auto keys = kv.c_keys();
  ccp_report* raw = nullptr;
  st = ccp_solve(inst.get(), algorithm.c_str(), keys.data(), kv.values.data(),
                 kv.keys.size(), a.x0.empty() ? nullptr : a.x0.data(), a.x0.size(), a.seed,
                 a.no_certify ? 0 : 1, &raw);
  ReportPtr rep(raw);
  if (st != CCP_OK) return fail(st);
  return finish_report(rep.get(), a.iterates, a.out);
}

// ----------------------------------------------------------------- check

struct CheckArgs {
  std::string instance;
  std::string point;
  double feas_tol = 1e-6;
  std::string out;
};

int run_check(CheckArgs& a) {
  InstancePtr inst;
  ccp_status st = open_instance(a.instance, inst);
  if (st != CCP_OK) return fail(st);
  char* json = nullptr;
  st = ccp_check_point_file(inst.get(), a.point.c_str(), a.feas_tol, &json);
  StringPtr j(json);
  if (st != CCP_OK) return fail(st);
  return emit(a.out, j.get());
}

// ----------------------------------------------------------------- bench

struct BenchArgs {
  std::string plan;
  std::size_t jobs = 1;
};

int run_bench(BenchArgs& a) {
  char* table = nullptr;
  const ccp_status st = ccp_benchmark(a.plan.c_str(), a.jobs, &table);
  StringPtr t(table);
  if (st != CCP_OK) return fail(st);
  std::cout << t.get();
  return kExitOk;
}

void add_named(CLI::App* cmd, std::map<std::string, std::optional<double>>& named,
               const std::string& flag, const std::string& key, const std::string& help) {
  cmd->add_option("--" + flag, named[key], help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chance-constrained solver: penalty DC methods and baselines"};
  app.set_version_flag("--version", std::string(ccp_version()));
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a family instance");
  gen_cmd->add_option("--family", gen.family, "norm | transport | portfolio")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out,-o", gen.out, "Instance file to write")->required();
  gen_cmd->add_option("--param", gen.params, "Extra family parameter key=value");
  add_named(gen_cmd, gen.named, "S", "S", "Scenario count");
  add_named(gen_cmd, gen.named, "alpha", "alpha", "Risk level");
  add_named(gen_cmd, gen.named, "d", "d", "Dimension (norm)");
  add_named(gen_cmd, gen.named, "mcons", "mcons", "Rows per scenario (norm)");
  add_named(gen_cmd, gen.named, "theta", "theta", "Norm radius (norm)");
  add_named(gen_cmd, gen.named, "xmax", "xmax", "Box bound (norm)");
  add_named(gen_cmd, gen.named, "n", "n", "Suppliers or assets");
  add_named(gen_cmd, gen.named, "m-cust", "m_cust", "Customers (transport)");
  add_named(gen_cmd, gen.named, "demand-loc", "demand_loc", "Demand location (transport)");
  add_named(gen_cmd, gen.named, "demand-scale", "demand_scale", "Demand scale (transport)");
  add_named(gen_cmd, gen.named, "capacity-factor", "capacity_factor",
            "Capacity over mean demand (transport)");
  add_named(gen_cmd, gen.named, "gamma", "gamma", "Risk aversion (portfolio)");
  add_named(gen_cmd, gen.named, "target", "target", "Return target (portfolio)");
  add_named(gen_cmd, gen.named, "cap", "cap", "Per-asset cap (portfolio)");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run one algorithm on an instance");
  solve_cmd->add_option("--instance,-i", solve.instance, "Instance file, or t1 / example1")
      ->required();
  solve_cmd->add_option("--algorithm,--alg,-a", solve.algorithm, "pendc-p | pendc-l | dca | cvar | oracle")
      ->check(CLI::IsMember({"pendc-p", "pendc-l", "dca", "cvar", "oracle"}));
  solve_cmd->add_option("--x0", solve.x0, "Start point (selector for pendc-l)")
      ->delimiter(',');
  solve_cmd->add_option("--seed", solve.seed, "Seed for random starts");
  solve_cmd->add_flag("--random-start", solve.random_start, "Seeded random start (pendc-p)");
  solve_cmd->add_flag("--no-certify", solve.no_certify, "Skip stationarity certificates");
  solve_cmd->add_flag("--iterates", solve.iterates, "Include per-iteration traces");
  solve_cmd->add_option("--out,-o", solve.out, "Report file (default: stdout)");
  solve_cmd->add_option("--set", solve.set, "Override key=value");
  add_named(solve_cmd, solve.named, "sigma0", "sigma0", "Initial penalty");
  add_named(solve_cmd, solve.named, "beta", "beta", "Penalty growth factor");
  add_named(solve_cmd, solve.named, "rho", "rho", "Proximal weight");
  add_named(solve_cmd, solve.named, "outer-max", "outer_max", "Outer iteration cap");
  add_named(solve_cmd, solve.named, "inner-max", "inner_max", "Inner iteration cap");
  add_named(solve_cmd, solve.named, "inner-rel-tol", "inner_rel_tol", "Inner stop tolerance");
  add_named(solve_cmd, solve.named, "feas-tol", "feas_tol", "Feasibility tolerance");
  add_named(solve_cmd, solve.named, "tol", "tol", "Solver tolerance (cvar)");

  SolveArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact solve by drop-set enumeration");
  oracle_cmd->add_option("--instance,-i", oracle.instance, "Instance file, or t1 / example1")
      ->required();
  oracle_cmd->add_option("--out,-o", oracle.out, "Report file (default: stdout)");
  add_named(oracle_cmd, oracle.named, "cap", "max_subsets", "Maximum drop sets to enumerate");

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Evaluate feasibility and certificates");
  check_cmd->add_option("--instance,-i", check.instance, "Instance file, or t1 / example1")
      ->required();
  check_cmd->add_option("--point,-p", check.point, "Point or report file")->required();
  check_cmd->add_option("--feas-tol", check.feas_tol, "Feasibility tolerance")
      ->check(CLI::PositiveNumber);
  check_cmd->add_option("--out,-o", check.out, "Output file (default: stdout)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark plan");
  bench_cmd->add_option("--plan", bench.plan, "Plan file")->required();
  bench_cmd->add_option("--jobs,-j", bench.jobs, "Parallel workers")
      ->check(CLI::Range(std::size_t{1}, std::size_t{256}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (solve_cmd->parsed()) return run_solve(solve, solve.algorithm);
    if (oracle_cmd->parsed()) return run_solve(oracle, "oracle");
    if (check_cmd->parsed()) return run_check(check);
    if (bench_cmd->parsed()) return run_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error (internal): " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
