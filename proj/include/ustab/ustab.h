#ifndef USTAB_USTAB_H
#define USTAB_USTAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(USTAB_BUILDING)
#define USTAB_API __attribute__((visibility("default")))
#else
#define USTAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ustab_status {
  USTAB_OK = 0,
  USTAB_E_INVALID_SPEC = 1,
  USTAB_E_NON_POSITIVE_PROBABILITY = 2,
  USTAB_E_DISCONNECTED_TREE = 3,
  USTAB_E_DEGENERATE_BRANCHING = 4,
  USTAB_E_NO_MARTINGALE_MEASURE = 5,
  USTAB_E_EMPTY_BUNDLE = 6,
  USTAB_E_CONJUGATE_DIVERGES = 7,
  USTAB_E_BOUNDARY_POINT = 8,
  USTAB_E_NOT_APPLICABLE = 9,
  USTAB_E_NO_POWER_BOUND = 10,
  USTAB_E_INFEASIBLE_START = 11,
  USTAB_E_SOLVER_DIVERGED = 12,
  USTAB_E_MISMATCHED_PAIR = 13,
  USTAB_E_EMPTY_SET = 14,
  USTAB_E_CONFIG = 15,
  USTAB_E_IO = 16,
  USTAB_E_ARGUMENT = 17, /* null handle or bad buffer */
  USTAB_E_INTERNAL = 18
} ustab_status;

typedef struct ustab_config ustab_config;
typedef struct ustab_solution ustab_solution;
typedef struct ustab_stability ustab_stability;
typedef struct ustab_counterexample ustab_counterexample;

typedef struct ustab_record {
  int n;
  double u, v, du_dx, dv_dy;
  double kyfan_x, kyfan_y, hausdorff, tv, v_at_limit_point;
} ustab_record;

typedef struct ustab_counterexample_row {
  int m;
  int n;
  double tv, kyfan, orlicz;
} ustab_counterexample_row;

/* Message of the last failure on the calling thread ("" if none). */
USTAB_API const char* ustab_last_error(void);
USTAB_API const char* ustab_status_name(ustab_status status);
/* Input errors (config, market, family) versus failures while solving. */
USTAB_API int ustab_status_is_input_error(ustab_status status);
USTAB_API const char* ustab_version(void);

/* ---- configuration ---- */
USTAB_API ustab_status ustab_config_load(const char* path, ustab_config** out);
USTAB_API ustab_status ustab_config_parse(const char* json, ustab_config** out);
USTAB_API void ustab_config_free(ustab_config* cfg);
USTAB_API ustab_status ustab_config_set_seed(ustab_config* cfg, uint64_t seed);
USTAB_API ustab_status ustab_config_set_n_max(ustab_config* cfg, int n_max);
USTAB_API ustab_status ustab_config_set_tol(ustab_config* cfg, double tol);
USTAB_API ustab_status ustab_config_set_point(ustab_config* cfg, double x, const double* q, size_t nq);
USTAB_API ustab_status ustab_config_set_out_dir(ustab_config* cfg, const char* dir);
USTAB_API const char* ustab_config_out_dir(const ustab_config* cfg);

/* Builds the market, checks the martingale measures and, when present, the
   perturbation family. */
USTAB_API ustab_status ustab_validate(const ustab_config* cfg);

/* ---- single instance ---- */
USTAB_API ustab_status ustab_solve(const ustab_config* cfg, ustab_solution** out);
USTAB_API void ustab_solution_free(ustab_solution* s);
USTAB_API double ustab_solution_value(const ustab_solution* s);
USTAB_API double ustab_solution_dual_value(const ustab_solution* s);
USTAB_API double ustab_solution_marginal(const ustab_solution* s);
USTAB_API double ustab_solution_link_residual(const ustab_solution* s);
/* Copies up to `cap` entries and returns the number of atoms. */
USTAB_API size_t ustab_solution_wealth(const ustab_solution* s, double* buf, size_t cap);
USTAB_API size_t ustab_solution_dual_density(const ustab_solution* s, double* buf, size_t cap);
/* Writes solution.csv and summary.json into `dir`. */
USTAB_API ustab_status ustab_solution_write(const ustab_solution* s, const char* dir);

/* prices.json: polytope vertices, price set, N-TRAD, marginal prices. */
USTAB_API ustab_status ustab_prices_write(const ustab_config* cfg, const char* dir);

/* ---- stability experiment ---- */
USTAB_API ustab_status ustab_stability_run(const ustab_config* cfg, ustab_stability** out);
USTAB_API void ustab_stability_free(ustab_stability* s);
USTAB_API int ustab_stability_pass(const ustab_stability* s);
USTAB_API size_t ustab_stability_num_records(const ustab_stability* s);
USTAB_API ustab_status ustab_stability_record(const ustab_stability* s, size_t i, ustab_record* out);
/* stability.csv, cm.csv and stability_summary.json */
USTAB_API ustab_status ustab_stability_write(const ustab_stability* s, const char* dir);

/* ---- counterexample ---- */
USTAB_API ustab_status ustab_counterexample_run(const ustab_config* cfg, ustab_counterexample** out);
USTAB_API void ustab_counterexample_free(ustab_counterexample* c);
USTAB_API size_t ustab_counterexample_num_rows(const ustab_counterexample* c, int diagonal);
USTAB_API ustab_status ustab_counterexample_row_at(const ustab_counterexample* c, int diagonal, size_t i,
                                                   ustab_counterexample_row* out);
USTAB_API int ustab_counterexample_fixed_converges(const ustab_counterexample* c);
USTAB_API int ustab_counterexample_diagonal_unstable(const ustab_counterexample* c);
/* counterexample_diagonal.csv, counterexample_fixed.csv, counterexample_summary.json */
USTAB_API ustab_status ustab_counterexample_write(const ustab_counterexample* c, const char* dir);

#ifdef __cplusplus
}
#endif

#endif
