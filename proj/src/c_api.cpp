#include "ccp/ccp.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "ccp/algorithms.hpp"
#include "ccp/error.hpp"
#include "ccp/harness.hpp"
#include "ccp/rankops.hpp"

struct ccp_instance {
  ccp::ProblemInstance value;
};

struct ccp_report {
  ccp::SolveReport value;
};

namespace {

thread_local std::string last_error;

ccp_status map_code(ccp::ErrorCode code) {
  switch (code) {
    case ccp::ErrorCode::kInvalidArgument:
      return CCP_E_INVALID_ARGUMENT;
    case ccp::ErrorCode::kParse:
      return CCP_E_PARSE;
    case ccp::ErrorCode::kValidation:
      return CCP_E_VALIDATION;
    case ccp::ErrorCode::kIo:
      return CCP_E_IO;
    case ccp::ErrorCode::kDimension:
      return CCP_E_DIMENSION;
    case ccp::ErrorCode::kPrecondition:
      return CCP_E_PRECONDITION;
    case ccp::ErrorCode::kInfeasibleStart:
      return CCP_E_INFEASIBLE_START;
    case ccp::ErrorCode::kBudget:
      return CCP_E_BUDGET;
    case ccp::ErrorCode::kEngine:
      return CCP_E_ENGINE;
  }
  return CCP_E_INTERNAL;
}

// Runs fn and converts every exception into a status plus last_error.
template <typename Fn>
ccp_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return CCP_OK;
  } catch (const ccp::Error& e) {
    last_error = e.what();
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CCP_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CCP_E_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return CCP_E_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw ccp::Error(ccp::ErrorCode::kInvalidArgument, what);
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

ccp::VectorXd to_vec(const double* v, size_t n) {
  ccp::VectorXd out(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

}  // namespace

extern "C" {

const char* ccp_version(void) { return ccp::kVersion; }

const char* ccp_status_name(ccp_status status) {
  switch (status) {
    case CCP_OK:
      return "ok";
    case CCP_E_INVALID_ARGUMENT:
      return "invalid_argument";
    case CCP_E_PARSE:
      return "parse";
    case CCP_E_VALIDATION:
      return "validation";
    case CCP_E_IO:
      return "io";
    case CCP_E_DIMENSION:
      return "dimension";
    case CCP_E_PRECONDITION:
      return "precondition";
    case CCP_E_INFEASIBLE_START:
      return "infeasible_start";
    case CCP_E_BUDGET:
      return "budget";
    case CCP_E_ENGINE:
      return "engine";
    case CCP_E_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* ccp_last_error(void) { return last_error.c_str(); }

void ccp_string_free(char* s) { std::free(s); }

ccp_status ccp_instance_load(const char* path, ccp_instance** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new ccp_instance{ccp::load_instance(path)};
  });
}

ccp_status ccp_instance_parse(const char* text, ccp_instance** out) {
  return guarded([&] {
    require(text != nullptr && out != nullptr, "null argument");
    ccp::ProblemInstance inst = ccp::parse_instance(text);
    ccp::require_valid(inst);
    *out = new ccp_instance{std::move(inst)};
  });
}

ccp_status ccp_instance_builtin(const char* name, double param, ccp_instance** out) {
  return guarded([&] {
    require(name != nullptr && out != nullptr, "null argument");
    const std::string n = name;
    if (n == "t1") {
      *out = new ccp_instance{ccp::reference_t1(param == 0.0 ? 0.2 : param)};
    } else if (n == "example1") {
      *out = new ccp_instance{ccp::reference_example1(param == 0.0 ? 1.0 : param)};
    } else {
      throw ccp::Error(ccp::ErrorCode::kInvalidArgument, "unknown builtin '" + n + "'");
    }
  });
}

ccp_status ccp_instance_generate(const char* family, const char* const* keys,
                                 const double* values, size_t count, uint64_t seed,
                                 ccp_instance** out) {
  return guarded([&] {
    require(family != nullptr && out != nullptr, "null argument");
    require(count == 0 || (keys != nullptr && values != nullptr), "null parameter arrays");
    ccp::FamilyParams params;
    for (size_t i = 0; i < count; ++i) {
      require(keys[i] != nullptr, "null parameter key");
      params[keys[i]] = values[i];
    }
    *out = new ccp_instance{
        ccp::generate_instance(ccp::parse_family(family), params, seed)};
  });
}

ccp_status ccp_instance_save(const ccp_instance* inst, const char* path) {
  return guarded([&] {
    require(inst != nullptr && path != nullptr, "null argument");
    ccp::save_instance(inst->value, path);
  });
}

ccp_status ccp_instance_validate(const ccp_instance* inst, char** message) {
  return guarded([&] {
    require(inst != nullptr, "null instance");
    const ccp::ValidationReport rep = ccp::validate_instance(inst->value);
    if (message != nullptr) *message = dup(rep.summary());
    if (!rep.ok()) throw ccp::Error(ccp::ErrorCode::kValidation, rep.summary());
  });
}

ccp_status ccp_instance_hash(const ccp_instance* inst, char** out) {
  return guarded([&] {
    require(inst != nullptr && out != nullptr, "null argument");
    *out = dup(ccp::instance_hash(inst->value));
  });
}

size_t ccp_instance_dim(const ccp_instance* inst) { return inst ? inst->value.dim() : 0; }

size_t ccp_instance_scenarios(const ccp_instance* inst) {
  return inst ? inst->value.S() : 0;
}

size_t ccp_instance_budget(const ccp_instance* inst) { return inst ? inst->value.m() : 0; }

double ccp_instance_alpha(const ccp_instance* inst) {
  return inst ? inst->value.risk.alpha() : 0.0;
}

void ccp_instance_free(ccp_instance* inst) { delete inst; }

ccp_status ccp_solve(const ccp_instance* inst, const char* algorithm,
                     const char* const* keys, const double* values, size_t count,
                     const double* x0, size_t x0_len, uint64_t seed, int certify,
                     ccp_report** out) {
  return guarded([&] {
    require(inst != nullptr && algorithm != nullptr && out != nullptr, "null argument");
    require(count == 0 || (keys != nullptr && values != nullptr), "null override arrays");
    require(x0_len == 0 || x0 != nullptr, "null x0 with nonzero length");
    ccp::RunRequest req;
    req.algorithm = algorithm;
    for (size_t i = 0; i < count; ++i) {
      require(keys[i] != nullptr, "null override key");
      if (std::string(keys[i]) == "random_start") req.random_start = values[i] != 0.0;
      else req.overrides[keys[i]] = values[i];
    }
    if (x0_len > 0) {
      if (req.algorithm == "pendc-l") req.z0 = to_vec(x0, x0_len);
      else req.x0 = to_vec(x0, x0_len);
    }
    req.seed = seed;
    req.options.certify = certify != 0;
    *out = new ccp_report{ccp::run_algorithm(inst->value, req)};
  });
}

ccp_report_status ccp_report_get_status(const ccp_report* rep) {
  if (rep == nullptr) return CCP_REPORT_INFEASIBLE;
  switch (rep->value.status) {
    case ccp::ReportStatus::kFeasibleStationary:
      return CCP_REPORT_FEASIBLE_STATIONARY;
    case ccp::ReportStatus::kFeasible:
      return CCP_REPORT_FEASIBLE;
    case ccp::ReportStatus::kInfeasible:
      return CCP_REPORT_INFEASIBLE;
    case ccp::ReportStatus::kBudgetExhausted:
      return CCP_REPORT_BUDGET_EXHAUSTED;
  }
  return CCP_REPORT_INFEASIBLE;
}

const char* ccp_report_status_name(ccp_report_status status) {
  switch (status) {
    case CCP_REPORT_FEASIBLE_STATIONARY:
      return "feasible_stationary";
    case CCP_REPORT_FEASIBLE:
      return "feasible";
    case CCP_REPORT_INFEASIBLE:
      return "infeasible";
    case CCP_REPORT_BUDGET_EXHAUSTED:
      return "budget_exhausted";
  }
  return "unknown";
}

double ccp_report_fval(const ccp_report* rep) { return rep ? rep->value.fval : 0.0; }

double ccp_report_prob(const ccp_report* rep) {
  return rep ? rep->value.empirical_prob : 0.0;
}

double ccp_report_wall_time(const ccp_report* rep) {
  return rep ? rep->value.wall_time_s : 0.0;
}

double ccp_report_penalty_residual(const ccp_report* rep) {
  return rep ? rep->value.penalty_residual : 0.0;
}

size_t ccp_report_x(const ccp_report* rep, double* buf, size_t len) {
  if (rep == nullptr) return 0;
  const auto d = static_cast<size_t>(rep->value.x_best.size());
  for (size_t i = 0; i < d && i < len && buf != nullptr; ++i) {
    buf[i] = rep->value.x_best(static_cast<Eigen::Index>(i));
  }
  return d;
}

ccp_status ccp_report_json(const ccp_report* rep, int include_iterates, char** out) {
  return guarded([&] {
    require(rep != nullptr && out != nullptr, "null argument");
    *out = dup(ccp::report_to_json(rep->value, include_iterates != 0));
  });
}

void ccp_report_free(ccp_report* rep) { delete rep; }

ccp_status ccp_check_point(const ccp_instance* inst, const double* x, size_t n,
                           const double* y, const double* z, size_t s_len,
                           double feas_tol, char** json_out) {
  return guarded([&] {
    require(inst != nullptr && json_out != nullptr, "null argument");
    require(n == 0 || x != nullptr, "null x");
    require((y == nullptr) == (z == nullptr), "pass both y and z or neither");
    require(feas_tol > 0.0, "feas_tol must be > 0");
    const ccp::VectorXd yv = y ? to_vec(y, s_len) : ccp::VectorXd();
    const ccp::VectorXd zv = z ? to_vec(z, s_len) : ccp::VectorXd();
    const ccp::PointCheck c = ccp::check_point(inst->value, to_vec(x, n), yv, zv, feas_tol);
    *json_out = dup(ccp::point_check_to_json(c));
  });
}

ccp_status ccp_check_point_file(const ccp_instance* inst, const char* path,
                                double feas_tol, char** json_out) {
  return guarded([&] {
    require(inst != nullptr && path != nullptr && json_out != nullptr, "null argument");
    require(feas_tol > 0.0, "feas_tol must be > 0");
    ccp::VectorXd x, y, z;
    ccp::load_point(path, x, y, z);
    const ccp::PointCheck c = ccp::check_point(inst->value, x, y, z, feas_tol);
    *json_out = dup(ccp::point_check_to_json(c));
  });
}

ccp_status ccp_rank_functionals(const double* values, size_t S, size_t m, double* G1,
                                double* G2, double* phi) {
  return guarded([&] {
    require(values != nullptr && S > 0, "empty values");
    require(m < S, "m must be < S");
    const ccp::RankFunctionals rf = ccp::rank_functionals(to_vec(values, S), m);
    if (G1) *G1 = rf.G1;
    if (G2) *G2 = rf.G2;
    if (phi) *phi = rf.phi;
  });
}

ccp_status ccp_project_selector(const double* v, size_t S, size_t m, double* out) {
  return guarded([&] {
    require(v != nullptr && out != nullptr && S > 0, "null argument");
    require(m <= S, "m must be <= S");
    const ccp::VectorXd p = ccp::project_onto_C(to_vec(v, S), m);
    for (size_t i = 0; i < S; ++i) out[i] = p(static_cast<Eigen::Index>(i));
  });
}

ccp_status ccp_benchmark(const char* plan_path, size_t jobs, char** table_out) {
  return guarded([&] {
    require(plan_path != nullptr, "null plan path");
    const ccp::BenchmarkPlan plan = ccp::load_plan(plan_path);
    const ccp::BenchmarkResult res = ccp::run_benchmark(plan, jobs == 0 ? 1 : jobs);
    if (table_out != nullptr) *table_out = dup(res.table);
  });
}

}  // extern "C"
