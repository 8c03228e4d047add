#ifndef CCP_CCP_H
#define CCP_CCP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CCP_API __declspec(dllexport)
#else
#define CCP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque handles. */
typedef struct ccp_instance ccp_instance;
typedef struct ccp_report ccp_report;

typedef enum ccp_status {
  CCP_OK = 0,
  CCP_E_INVALID_ARGUMENT = 1,
  CCP_E_PARSE = 2,
  CCP_E_VALIDATION = 3,
  CCP_E_IO = 4,
  CCP_E_DIMENSION = 5,
  CCP_E_PRECONDITION = 6,
  CCP_E_INFEASIBLE_START = 7,
  CCP_E_BUDGET = 8,
  CCP_E_ENGINE = 9,
  CCP_E_INTERNAL = 10
} ccp_status;

typedef enum ccp_report_status {
  CCP_REPORT_FEASIBLE_STATIONARY = 0,
  CCP_REPORT_FEASIBLE = 1,
  CCP_REPORT_INFEASIBLE = 2,
  CCP_REPORT_BUDGET_EXHAUSTED = 3
} ccp_report_status;

CCP_API const char* ccp_version(void);
CCP_API const char* ccp_status_name(ccp_status status);
/* Message of the last failed call on the calling thread; "" when none. */
CCP_API const char* ccp_last_error(void);
/* Frees strings returned through char** out-parameters. */
CCP_API void ccp_string_free(char* s);

/* ---- instances ---- */

CCP_API ccp_status ccp_instance_load(const char* path, ccp_instance** out);
CCP_API ccp_status ccp_instance_parse(const char* text, ccp_instance** out);
/* Builtin fixtures: "t1" (param = alpha, 0 for the default 0.2) and
   "example1" (param = objective slope, 0 for the default 1). */
CCP_API ccp_status ccp_instance_builtin(const char* name, double param, ccp_instance** out);
/* Family generator; keys/values are the family parameters. */
CCP_API ccp_status ccp_instance_generate(const char* family, const char* const* keys,
                                         const double* values, size_t count,
                                         uint64_t seed, ccp_instance** out);
CCP_API ccp_status ccp_instance_save(const ccp_instance* inst, const char* path);
/* CCP_E_VALIDATION with a finding summary in *message (may be NULL). */
CCP_API ccp_status ccp_instance_validate(const ccp_instance* inst, char** message);
CCP_API ccp_status ccp_instance_hash(const ccp_instance* inst, char** out);
CCP_API size_t ccp_instance_dim(const ccp_instance* inst);
CCP_API size_t ccp_instance_scenarios(const ccp_instance* inst);
CCP_API size_t ccp_instance_budget(const ccp_instance* inst);
CCP_API double ccp_instance_alpha(const ccp_instance* inst);
CCP_API void ccp_instance_free(ccp_instance* inst);

/* ---- solving ---- */

/* algorithm: "pendc-p", "pendc-l", "dca", "cvar" or "oracle". keys/values
   override schedule fields; the key "random_start" (nonzero) asks pendc-p for a
   seeded random start instead. x0 (length x0_len, may be NULL) is the start for
   pendc-p and dca, and the initial selector for pendc-l. */
CCP_API ccp_status ccp_solve(const ccp_instance* inst, const char* algorithm,
                             const char* const* keys, const double* values,
                             size_t count, const double* x0, size_t x0_len,
                             uint64_t seed, int certify, ccp_report** out);
CCP_API ccp_report_status ccp_report_get_status(const ccp_report* rep);
CCP_API const char* ccp_report_status_name(ccp_report_status status);
CCP_API double ccp_report_fval(const ccp_report* rep);
CCP_API double ccp_report_prob(const ccp_report* rep);
CCP_API double ccp_report_wall_time(const ccp_report* rep);
CCP_API double ccp_report_penalty_residual(const ccp_report* rep);
/* Copies min(len, d) entries of x_best into buf; returns d. */
CCP_API size_t ccp_report_x(const ccp_report* rep, double* buf, size_t len);
CCP_API ccp_status ccp_report_json(const ccp_report* rep, int include_iterates, char** out);
CCP_API void ccp_report_free(ccp_report* rep);

/* ---- checks and kernels ---- */

/* y and z may be NULL; otherwise both have length S. */
CCP_API ccp_status ccp_check_point(const ccp_instance* inst, const double* x, size_t n,
                                   const double* y, const double* z, size_t s_len,
                                   double feas_tol, char** json_out);
/* Point file: {"x": [...], "y": [...], "z": [...]} or a report with "x_best". */
CCP_API ccp_status ccp_check_point_file(const ccp_instance* inst, const char* path,
                                        double feas_tol, char** json_out);
CCP_API ccp_status ccp_rank_functionals(const double* values, size_t S, size_t m,
                                        double* G1, double* G2, double* phi);
CCP_API ccp_status ccp_project_selector(const double* v, size_t S, size_t m, double* out);

/* ---- benchmark ---- */

CCP_API ccp_status ccp_benchmark(const char* plan_path, size_t jobs, char** table_out);

#ifdef __cplusplus
}
#endif

#endif /* CCP_CCP_H */
