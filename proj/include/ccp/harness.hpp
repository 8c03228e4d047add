#ifndef CCP_HARNESS_HPP
#define CCP_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccp/algorithms.hpp"
#include "ccp/model.hpp"

namespace ccp {

inline constexpr const char* kVersion = "0.3.1";

/// Registered algorithm ids, in display order.
const std::vector<std::string>& algorithm_ids();
bool is_algorithm(const std::string& id);

/// Schedule / tolerance overrides keyed by field name, e.g. "sigma0", "beta",
/// "rho", "outer_max", "tol" (cvar), "max_subsets" (oracle).
using Overrides = std::map<std::string, double>;

/// Throws Error(kInvalidArgument) on keys the algorithm does not accept.
void check_overrides(const std::string& algorithm, const Overrides& overrides);

struct RunRequest {
  std::string algorithm;
  Overrides overrides;
  /// Start for pendc-p and dca. Empty: pendc-p uses the box center (or a
  /// seeded random start when random_start is set); dca starts from the
  /// conservative CVaR point.
  VectorXd x0;
  /// Initial selector for pendc-l; empty means all ones.
  VectorXd z0;
  bool random_start = false;
  std::uint64_t seed = 0;
  SolveOptions options;
};

/// Dispatches one solve. Errors from the algorithm propagate.
SolveReport run_algorithm(const ProblemInstance& instance, const RunRequest& request);

/// Machine-readable rendering of a report. Traces of inner iterates are
/// included only when include_iterates is set.
std::string report_to_json(const SolveReport& report, bool include_iterates = false,
                           int indent = 2);

// ------------------------------------------------------------ point checks

struct PointCheck {
  double phi = 0.0;
  double G1 = 0.0;
  double G2 = 0.0;
  double fval = 0.0;
  double empirical_prob = 0.0;
  std::size_t satisfied = 0;
  std::size_t required = 0;
  bool in_region = false;
  bool chance_feasible = false;
  bool strict_gap = false;
  std::optional<StrongCertificate> strong;  // when chance_feasible
  // Only when y and z were supplied.
  std::optional<double> complementarity;
  std::optional<bool> in_omega0;
  std::optional<bool> lower_bound_holds;  // V >= [phi]_+ - 1e-10
};

/// Evaluates rank functionals, feasibility and certificates at x; y and z
/// are optional (pass empty vectors).
PointCheck check_point(const ProblemInstance& instance, const VectorXd& x,
                       const VectorXd& y, const VectorXd& z, double feas_tol = 1e-6);

std::string point_check_to_json(const PointCheck& check, int indent = 2);

/// Reads {"x": [...], "y": [...], "z": [...]} or a report with "x_best".
void load_point(const std::string& path, VectorXd& x, VectorXd& y, VectorXd& z);

// --------------------------------------------------------------- benchmark

enum class TableFormat { kText, kCsv, kStructured };

TableFormat parse_table_format(const std::string& name);

struct InstanceSource {
  std::string file;                // instance file path
  std::string builtin;             // "t1" or "example1"
  std::optional<Family> family;    // generated: family + params, seeded per run
  FamilyParams params;

  std::string label() const;
};

struct PlanEntry {
  std::string id;
  InstanceSource source;
  std::string algorithm;
  Overrides overrides;
  std::size_t repetitions = 1;
  std::optional<std::uint64_t> seed_base;
};

struct BenchmarkPlan {
  std::vector<PlanEntry> entries;
  std::string output;  // directory for run records and the table; empty: none
  TableFormat format = TableFormat::kText;

  /// Throws Error(kInvalidArgument) naming the offending entry.
  void check() const;
};

/// Parses the plan document; relative instance paths resolve against
/// base_dir.
BenchmarkPlan parse_plan(const std::string& text, const std::string& base_dir = "");
BenchmarkPlan load_plan(const std::string& path);

/// Seed base used when an entry does not set one: CCP_PENDC_SEED if set,
/// otherwise 0.
std::uint64_t default_seed_base();

/// Resolves an instance for one repetition. Builtins are "t1" and "example1".
ProblemInstance materialize(const InstanceSource& source, std::uint64_t seed);

struct EnvironmentStamp {
  std::string version;
  std::uint64_t seed = 0;
  std::string timestamp;  // UTC, ISO 8601
};

struct RunRecord {
  std::string entry_id;
  std::size_t repetition = 0;
  std::string family;
  std::size_t S = 0;
  double alpha = 0.0;
  std::string algorithm;
  bool ok = false;       // false when the run raised an error
  std::string error;
  SolveReport report;
  EnvironmentStamp environment;
  std::string instance_hash;
};

std::string record_to_json(const RunRecord& record, int indent = 2);

struct TableRow {
  std::string family;
  std::size_t S = 0;
  double alpha = 0.0;
  std::string algorithm;
  double fval_mean = 0.0;
  double time_mean_s = 0.0;
  double prob_mean = 0.0;
  std::size_t solved = 0;
  std::size_t runs = 0;

  /// All repetitions returned a feasible point; otherwise fval and prob
  /// print as "/".
  bool complete() const { return runs > 0 && solved == runs; }
};

/// Groups records by (family, S, alpha, algorithm) in first-seen order.
std::vector<TableRow> summarize(const std::vector<RunRecord>& records);

std::string format_table(const std::vector<TableRow>& rows, TableFormat format);

struct BenchmarkResult {
  std::vector<RunRecord> records;
  std::vector<TableRow> rows;
  std::string table;
};

/// Runs every (entry, repetition) pair with up to `jobs` workers. Each
/// record is written to the output directory as soon as it finishes; the
/// table is assembled afterwards in plan order.
BenchmarkResult run_benchmark(const BenchmarkPlan& plan, std::size_t jobs = 1);

/// Writes text to path through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace ccp

#endif  // CCP_HARNESS_HPP
