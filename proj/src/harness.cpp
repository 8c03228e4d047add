#include "ccp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ccp/error.hpp"
#include "ccp/rankops.hpp"

namespace ccp {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const std::set<std::string> kScheduleKeys = {
    "sigma0",         "beta",           "rho",      "inner_rel_tol", "outer_max",
    "inner_max",      "warm_cap_first", "warm_cap_second", "feas_tol",
    "subproblem_tol"};
const std::set<std::string> kDcaKeys = {"inner_rel_tol", "inner_max", "feas_tol",
                                        "subproblem_tol"};
const std::set<std::string> kCountKeys = {"outer_max", "inner_max", "warm_cap_first",
                                          "warm_cap_second", "max_subsets"};

const std::set<std::string>& allowed_keys(const std::string& algorithm) {
  static const std::set<std::string> cvar = {"tol"};
  static const std::set<std::string> oracle = {"max_subsets"};
  if (algorithm == "cvar") return cvar;
  if (algorithm == "oracle") return oracle;
  if (algorithm == "dca") return kDcaKeys;
  return kScheduleKeys;
}

std::size_t as_count(const std::string& key, double v) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw Error(ErrorCode::kInvalidArgument,
                "override '" + key + "' must be a nonnegative integer");
  }
  return static_cast<std::size_t>(v);
}

void apply_overrides(PenaltySchedule& sched, const Overrides& overrides) {
  for (const auto& [key, v] : overrides) {
    if (key == "sigma0") sched.sigma0 = v;
    else if (key == "beta") sched.beta = v;
    else if (key == "rho") sched.rho = v;
    else if (key == "inner_rel_tol") sched.inner_rel_tol = v;
    else if (key == "outer_max") sched.outer_max = as_count(key, v);
    else if (key == "inner_max") sched.inner_max = as_count(key, v);
    else if (key == "warm_cap_first") sched.warm_cap_first = as_count(key, v);
    else if (key == "warm_cap_second") sched.warm_cap_second = as_count(key, v);
    else if (key == "feas_tol") sched.feas_tol = v;
    else if (key == "subproblem_tol") sched.subproblem_tol = v;
  }
  sched.check();
}

double override_or(const Overrides& overrides, const std::string& key, double fallback) {
  auto it = overrides.find(key);
  return it == overrides.end() ? fallback : it->second;
}

json vec_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json index_json(const std::vector<std::size_t>& v) {
  json a = json::array();
  for (std::size_t i : v) a.push_back(i);
  return a;
}

VectorXd json_vec(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::kParse, what + ": expected an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::kParse, what + ": expected numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json strong_json(const StrongCertificate& c) {
  return json{{"positive", c.positive},
              {"point_value", c.point_value},
              {"relaxed_value", c.relaxed_value},
              {"index_y", index_json(c.index_y)},
              {"index_z", index_json(c.index_z)},
              {"index_0", index_json(c.index_0)}};
}

json report_json(const SolveReport& r, bool include_iterates) {
  json sigma = json::array();
  for (const auto& s : r.sigma_trace) {
    sigma.push_back({{"sigma", s.sigma},
                     {"inner_iterations", s.inner_iterations},
                     {"objective", s.objective},
                     {"stalled", s.stalled}});
  }
  json j{{"algorithm", r.algorithm},
         {"status", to_string(r.status)},
         {"x_best", vec_json(r.x_best)},
         {"fval", r.fval},
         {"empirical_prob", r.empirical_prob},
         {"penalty_residual", r.penalty_residual},
         {"wall_time_s", r.wall_time_s},
         {"sigma_trace", sigma},
         {"subproblems_solved", r.subproblems_solved},
         {"instance_hash", r.instance_hash},
         {"message", r.message}};
  j["strong"] = r.strong ? strong_json(*r.strong) : json(nullptr);
  j["strict_gap"] = r.strict_gap ? json(*r.strict_gap) : json(nullptr);
  if (r.y.size() > 0) j["y"] = vec_json(r.y);
  if (r.z.size() > 0) j["z"] = vec_json(r.z);
  if (r.algorithm == "oracle") {
    j["drop_set"] = index_json(r.drop_set);
    j["optimal_drop_sets"] = r.optimal_drop_sets;
  }
  if (include_iterates) {
    json inner = json::array();
    for (const auto& t : r.inner_trace) {
      json e{{"outer", t.outer}, {"sigma", t.sigma}, {"objective", t.objective},
             {"x", vec_json(t.x)}};
      if (t.y.size() > 0) e["y"] = vec_json(t.y);
      if (t.z.size() > 0) e["z"] = vec_json(t.z);
      inner.push_back(std::move(e));
    }
    j["inner_trace"] = std::move(inner);
  }
  return j;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string file_stem(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

json record_json(const RunRecord& rec) {
  json j{{"entry_id", rec.entry_id},
         {"repetition", rec.repetition},
         {"family", rec.family},
         {"S", rec.S},
         {"alpha", rec.alpha},
         {"algorithm", rec.algorithm},
         {"ok", rec.ok},
         {"environment",
          {{"version", rec.environment.version},
           {"seed", rec.environment.seed},
           {"timestamp", rec.environment.timestamp}}},
         {"instance_hash", rec.instance_hash}};
  if (rec.ok) {
    j["report"] = report_json(rec.report, false);
  } else {
    j["error"] = rec.error;
  }
  return j;
}

}  // namespace

// -------------------------------------------------------------- dispatching

const std::vector<std::string>& algorithm_ids() {
  static const std::vector<std::string> ids = {"pendc-p", "pendc-l", "dca", "cvar",
                                               "oracle"};
  return ids;
}

bool is_algorithm(const std::string& id) {
  const auto& ids = algorithm_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

void check_overrides(const std::string& algorithm, const Overrides& overrides) {
  if (!is_algorithm(algorithm)) {
    throw Error(ErrorCode::kInvalidArgument, "unknown algorithm '" + algorithm + "'");
  }
  const auto& allowed = allowed_keys(algorithm);
  for (const auto& [key, v] : overrides) {
    if (!allowed.count(key)) {
      throw Error(ErrorCode::kInvalidArgument,
                  algorithm + ": unsupported override '" + key + "'");
    }
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "override '" + key + "' must be finite");
    }
    if (kCountKeys.count(key)) as_count(key, v);
  }
}

SolveReport run_algorithm(const ProblemInstance& instance, const RunRequest& request) {
  check_overrides(request.algorithm, request.overrides);
  const std::string& alg = request.algorithm;
  if (alg == "pendc-l") {
    PenaltySchedule sched = PenaltySchedule::lifted_defaults();
    apply_overrides(sched, request.overrides);
    return pendc_lifted(instance, sched, request.z0, request.options);
  }
  if (alg == "pendc-p") {
    PenaltySchedule sched = PenaltySchedule::primal_defaults(instance);
    apply_overrides(sched, request.overrides);
    VectorXd x0 = request.x0;
    if (x0.size() == 0) {
      x0 = request.random_start ? random_start(instance, request.seed)
                                : default_start(instance);
    }
    return pendc_primal(instance, sched, x0, request.options);
  }
  if (alg == "dca") {
    PenaltySchedule sched;
    apply_overrides(sched, request.overrides);
    VectorXd x0 = request.x0;
    if (x0.size() == 0) {
      SolveOptions quiet = request.options;
      quiet.certify = false;
      quiet.record_iterates = false;
      const SolveReport start = cvar_baseline(instance, 1e-8, quiet);
      x0 = start.feasible() ? start.x_best : default_start(instance);
    }
    return dca_baseline(instance, sched, x0, request.options);
  }
  if (alg == "cvar") {
    return cvar_baseline(instance, override_or(request.overrides, "tol", 1e-8),
                         request.options);
  }
  return enumeration_oracle(
      instance,
      static_cast<std::size_t>(override_or(request.overrides, "max_subsets", 200000)),
      request.options);
}

std::string report_to_json(const SolveReport& report, bool include_iterates, int indent) {
  return report_json(report, include_iterates).dump(indent);
}

// ------------------------------------------------------------- point checks

PointCheck check_point(const ProblemInstance& instance, const VectorXd& x,
                       const VectorXd& y, const VectorXd& z, double feas_tol) {
  if (static_cast<std::size_t>(x.size()) != instance.dim()) {
    throw Error(ErrorCode::kDimension, "point has the wrong length");
  }
  const auto S = static_cast<Eigen::Index>(instance.S());
  if ((y.size() != 0 && y.size() != S) || (z.size() != 0 && z.size() != S)) {
    throw Error(ErrorCode::kDimension, "y and z must have length S");
  }
  PointCheck c;
  const ScenarioValues sv = scenario_values(instance, x);
  const RankFunctionals rf = rank_functionals(sv.values, instance.m());
  c.phi = rf.phi;
  c.G1 = rf.G1;
  c.G2 = rf.G2;
  c.fval = instance.objective.value(x);
  c.satisfied = static_cast<std::size_t>((sv.values.array() <= feas_tol).count());
  c.required = instance.risk.required();
  c.empirical_prob = static_cast<double>(c.satisfied) / static_cast<double>(instance.S());
  c.in_region = instance.region.contains(x, 1e-6);
  c.chance_feasible = c.satisfied >= c.required;
  c.strict_gap = check_strict_gap(instance, x);
  if (c.chance_feasible && rf.phi <= feas_tol) {
    const LiftedPoint lp = lift_point(instance, x, feas_tol);
    c.strong = check_strong_stationarity(instance, lp, std::max(feas_tol, 1e-7));
  }
  if (y.size() == S && z.size() == S) {
    const double V = complementarity(y, z);
    c.complementarity = V;
    bool omega0 = in_C(z, instance.m(), 1e-9) && (y.array() >= -1e-12).all();
    for (Eigen::Index s = 0; s < S; ++s) omega0 = omega0 && sv.values(s) <= y(s) + 1e-8;
    c.in_omega0 = omega0;
    c.lower_bound_holds = V >= std::max(0.0, rf.phi) - 1e-10;
  }
  return c;
}

std::string point_check_to_json(const PointCheck& c, int indent) {
  json j{{"phi", c.phi},
         {"G1", c.G1},
         {"G2", c.G2},
         {"fval", c.fval},
         {"empirical_prob", c.empirical_prob},
         {"satisfied", c.satisfied},
         {"required", c.required},
         {"in_region", c.in_region},
         {"chance_feasible", c.chance_feasible},
         {"strict_gap", c.strict_gap}};
  j["strong"] = c.strong ? strong_json(*c.strong) : json(nullptr);
  if (c.complementarity) j["complementarity"] = *c.complementarity;
  if (c.in_omega0) j["in_omega0"] = *c.in_omega0;
  if (c.lower_bound_holds) j["lower_bound_holds"] = *c.lower_bound_holds;
  return j.dump(indent);
}

void load_point(const std::string& path, VectorXd& x, VectorXd& y, VectorXd& z) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, path + ": expected an object");
  if (j.contains("x")) x = json_vec(j["x"], "x");
  else if (j.contains("x_best")) x = json_vec(j["x_best"], "x_best");
  else throw Error(ErrorCode::kParse, path + ": missing 'x'");
  y = j.contains("y") ? json_vec(j["y"], "y") : VectorXd();
  z = j.contains("z") ? json_vec(j["z"], "z") : VectorXd();
}

// ---------------------------------------------------------------- planning

TableFormat parse_table_format(const std::string& name) {
  if (name == "text") return TableFormat::kText;
  if (name == "csv") return TableFormat::kCsv;
  if (name == "structured" || name == "json") return TableFormat::kStructured;
  throw Error(ErrorCode::kInvalidArgument, "unknown table format '" + name + "'");
}

std::string InstanceSource::label() const {
  if (family) return to_string(*family);
  if (!builtin.empty()) return builtin;
  return fs::path(file).stem().string();
}

void BenchmarkPlan::check() const {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const PlanEntry& e = entries[i];
    const std::string where = "entries[" + std::to_string(i) + "]";
    if (!ids.insert(e.id).second) {
      throw Error(ErrorCode::kInvalidArgument, where + ": duplicate id '" + e.id + "'");
    }
    if (e.repetitions < 1) {
      throw Error(ErrorCode::kInvalidArgument, where + ": repetitions must be >= 1");
    }
    const int sources = static_cast<int>(!e.source.file.empty()) +
                        static_cast<int>(!e.source.builtin.empty()) +
                        static_cast<int>(e.source.family.has_value());
    if (sources != 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  where + ": exactly one of instance / family is required");
    }
    if (!e.source.builtin.empty() && e.source.builtin != "t1" &&
        e.source.builtin != "example1") {
      throw Error(ErrorCode::kInvalidArgument, where + ": unknown builtin");
    }
    try {
      check_overrides(e.algorithm, e.overrides);
    } catch (const Error& err) {
      throw Error(ErrorCode::kInvalidArgument, where + ": " + err.what());
    }
  }
}

BenchmarkPlan parse_plan(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("plan: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, "plan: expected an object");
  for (const auto& [key, v] : j.items()) {
    if (key != "entries" && key != "output" && key != "format") {
      throw Error(ErrorCode::kParse, "plan: unknown key '" + key + "'");
    }
  }
  BenchmarkPlan plan;
  if (j.contains("output")) plan.output = j["output"].get<std::string>();
  if (j.contains("format")) plan.format = parse_table_format(j["format"].get<std::string>());
  const json entries = j.value("entries", json::array());
  if (!entries.is_array()) throw Error(ErrorCode::kParse, "plan: 'entries' must be an array");
  static const std::set<std::string> entry_keys = {
      "id", "algorithm", "instance", "family", "params", "overrides", "repetitions",
      "seed_base"};
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const json& e = entries[i];
    const std::string where = "plan: entries[" + std::to_string(i) + "]";
    if (!e.is_object()) throw Error(ErrorCode::kParse, where + ": expected an object");
    for (const auto& [key, v] : e.items()) {
      if (!entry_keys.count(key)) {
        throw Error(ErrorCode::kParse, where + ": unknown key '" + key + "'");
      }
    }
    try {
      PlanEntry entry;
      entry.id = e.value("id", "e" + std::to_string(i));
      entry.algorithm = e.at("algorithm").get<std::string>();
      if (e.contains("instance")) {
        const std::string inst = e["instance"].get<std::string>();
        if (inst == "t1" || inst == "example1") {
          entry.source.builtin = inst;
        } else {
          fs::path p(inst);
          if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
          entry.source.file = p.string();
        }
      }
      if (e.contains("family")) entry.source.family = parse_family(e["family"].get<std::string>());
      if (e.contains("params")) {
        for (const auto& [k, v] : e["params"].items()) entry.source.params[k] = v.get<double>();
      }
      if (e.contains("overrides")) {
        for (const auto& [k, v] : e["overrides"].items()) entry.overrides[k] = v.get<double>();
      }
      if (e.contains("repetitions")) {
        const long long r = e["repetitions"].get<long long>();
        if (r < 1) throw Error(ErrorCode::kInvalidArgument, "repetitions must be >= 1");
        entry.repetitions = static_cast<std::size_t>(r);
      }
      if (e.contains("seed_base")) entry.seed_base = e["seed_base"].get<std::uint64_t>();
      plan.entries.push_back(std::move(entry));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kParse, where + ": " + ex.what());
    }
  }
  plan.check();
  return plan;
}

BenchmarkPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open plan '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str(), fs::path(path).parent_path().string());
}

std::uint64_t default_seed_base() {
  const char* env = std::getenv("CCP_PENDC_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw Error(ErrorCode::kInvalidArgument, "CCP_PENDC_SEED must be an unsigned integer");
  }
  return static_cast<std::uint64_t>(v);
}

ProblemInstance materialize(const InstanceSource& source, std::uint64_t seed) {
  if (source.family) return generate_instance(*source.family, source.params, seed);
  if (source.builtin == "t1") {
    auto it = source.params.find("alpha");
    return reference_t1(it == source.params.end() ? 0.2 : it->second);
  }
  if (source.builtin == "example1") {
    auto it = source.params.find("slope");
    return reference_example1(it == source.params.end() ? 1.0 : it->second);
  }
  return load_instance(source.file);
}

// ------------------------------------------------------------------ tables

std::string record_to_json(const RunRecord& record, int indent) {
  return record_json(record).dump(indent);
}

std::vector<TableRow> summarize(const std::vector<RunRecord>& records) {
  std::vector<TableRow> rows;
  std::vector<double> fsum, psum;
  for (const RunRecord& rec : records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const TableRow& r) {
      return r.family == rec.family && r.S == rec.S && r.alpha == rec.alpha &&
             r.algorithm == rec.algorithm;
    });
    if (it == rows.end()) {
      TableRow row;
      row.family = rec.family;
      row.S = rec.S;
      row.alpha = rec.alpha;
      row.algorithm = rec.algorithm;
      rows.push_back(row);
      fsum.push_back(0.0);
      psum.push_back(0.0);
      it = rows.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - rows.begin());
    ++it->runs;
    if (rec.ok) it->time_mean_s += rec.report.wall_time_s;
    if (rec.ok && rec.report.feasible()) {
      ++it->solved;
      fsum[k] += rec.report.fval;
      psum[k] += rec.report.empirical_prob;
    }
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    TableRow& r = rows[k];
    r.time_mean_s /= static_cast<double>(r.runs);
    if (r.solved > 0) {
      r.fval_mean = fsum[k] / static_cast<double>(r.solved);
      r.prob_mean = psum[k] / static_cast<double>(r.solved);
    }
  }
  return rows;
}

std::string format_table(const std::vector<TableRow>& rows, TableFormat format) {
  std::ostringstream out;
  if (format == TableFormat::kStructured) {
    json a = json::array();
    for (const TableRow& r : rows) {
      a.push_back({{"family", r.family},
                   {"S", r.S},
                   {"alpha", r.alpha},
                   {"algorithm", r.algorithm},
                   {"fval_mean", r.complete() ? json(r.fval_mean) : json(nullptr)},
                   {"time_mean_s", r.time_mean_s},
                   {"prob_mean", r.complete() ? json(r.prob_mean) : json(nullptr)},
                   {"solved", r.solved},
                   {"runs", r.runs}});
    }
    return json{{"rows", a}}.dump(2) + "\n";
  }
  if (format == TableFormat::kCsv) {
    out << "family,S,alpha,algorithm,fval_mean,time_mean_s,prob_mean,solved\n";
    for (const TableRow& r : rows) {
      out << r.family << ',' << r.S << ',' << fmt("%.6g", r.alpha) << ',' << r.algorithm
          << ',' << (r.complete() ? fmt("%.10g", r.fval_mean) : "/") << ','
          << fmt("%.6g", r.time_mean_s) << ','
          << (r.complete() ? fmt("%.10g", r.prob_mean) : "/") << ',' << r.solved << '/'
          << r.runs << '\n';
    }
    return out.str();
  }
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %6s %8s %-9s %14s %10s %8s %7s\n", "family", "S",
                "alpha", "algorithm", "fval", "time_s", "prob", "solved");
  out << line;
  for (const TableRow& r : rows) {
    const std::string solved = std::to_string(r.solved) + "/" + std::to_string(r.runs);
    std::snprintf(line, sizeof line, "%-16s %6zu %8.4g %-9s %14s %10.4g %8s %7s\n",
                  r.family.c_str(), r.S, r.alpha, r.algorithm.c_str(),
                  r.complete() ? fmt("%.6g", r.fval_mean).c_str() : "/", r.time_mean_s,
                  r.complete() ? fmt("%.4g", r.prob_mean).c_str() : "/", solved.c_str());
    out << line;
  }
  return out.str();
}

void write_file_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp + "'");
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::kIo, "cannot move '" + tmp + "' into place");
  }
}

// --------------------------------------------------------------- benchmark

BenchmarkResult run_benchmark(const BenchmarkPlan& plan, std::size_t jobs) {
  plan.check();
  struct Task {
    const PlanEntry* entry;
    std::size_t rep;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  const std::uint64_t fallback_base = default_seed_base();
  for (const PlanEntry& e : plan.entries) {
    const std::uint64_t base = e.seed_base.value_or(fallback_base);
    for (std::size_t r = 0; r < e.repetitions; ++r) tasks.push_back({&e, r, base + r});
  }
  if (!plan.output.empty()) fs::create_directories(plan.output);

  BenchmarkResult result;
  result.records.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string fatal;

  auto worker = [&]() {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const Task& t = tasks[k];
      RunRecord rec;
      rec.entry_id = t.entry->id;
      rec.repetition = t.rep;
      rec.family = t.entry->source.label();
      rec.algorithm = t.entry->algorithm;
      rec.environment = {kVersion, t.seed, utc_now()};
      try {
        const ProblemInstance inst = materialize(t.entry->source, t.seed);
        rec.S = inst.S();
        rec.alpha = inst.risk.alpha();
        rec.instance_hash = instance_hash(inst);
        RunRequest req;
        req.algorithm = t.entry->algorithm;
        req.overrides = t.entry->overrides;
        req.seed = t.seed;
        req.options.record_iterates = false;
        rec.report = run_algorithm(inst, req);
        rec.ok = true;
        if (rec.report.feasible() &&
            rec.report.empirical_prob < 1.0 - inst.risk.alpha() - 1e-12) {
          throw Error(ErrorCode::kEngine, "report marked feasible below 1 - alpha");
        }
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
      try {
        if (!plan.output.empty()) {
          const std::string name =
              file_stem(rec.entry_id) + "_r" + std::to_string(rec.repetition) + ".json";
          write_file_atomic((fs::path(plan.output) / name).string(),
                            record_to_json(rec) + "\n");
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (fatal.empty()) fatal = e.what();
      }
      result.records[k] = std::move(rec);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (!fatal.empty()) throw Error(ErrorCode::kIo, fatal);

  result.rows = summarize(result.records);
  result.table = format_table(result.rows, plan.format);
  if (!plan.output.empty()) {
    const char* ext = plan.format == TableFormat::kCsv          ? "csv"
                      : plan.format == TableFormat::kStructured ? "json"
                                                                : "txt";
    write_file_atomic((fs::path(plan.output) / (std::string("table.") + ext)).string(),
                      result.table);
  }
  return result;
}

}  // namespace ccp
