/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "ustab/ustab.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static const char* binomial =
    "{\"market\": {\"s0\": [1.0], \"s1\": [[2.0], [0.5]], \"probabilities\": [0.5, 0.5]},"
    " \"utility\": {\"family\": \"log\"}, \"point\": {\"x\": 1.0}}";

int main(int argc, char** argv) {
  ustab_config* cfg = NULL;
  ustab_solution* sol = NULL;
  double w[4] = {0};
  char path[512];

  EXPECT(ustab_config_parse(binomial, &cfg) == USTAB_OK);
  EXPECT(ustab_validate(cfg) == USTAB_OK);
  EXPECT(ustab_solve(cfg, &sol) == USTAB_OK);
  EXPECT(fabs(ustab_solution_value(sol) - 0.5 * log(9.0 / 8.0)) < 1e-9);
  EXPECT(fabs(ustab_solution_dual_value(sol) - (-1.0 + 0.5 * log(9.0 / 8.0))) < 1e-9);
  EXPECT(ustab_solution_wealth(sol, w, 4) == 2);
  EXPECT(fabs(w[0] - 1.5) < 1e-9 && fabs(w[1] - 0.75) < 1e-9);
  EXPECT(ustab_solution_link_residual(sol) < 1e-7);
  EXPECT(ustab_solution_write(sol, "capi_out") == USTAB_OK);
  ustab_solution_free(sol);
  sol = NULL;

  /* outside K */
  EXPECT(ustab_config_set_point(cfg, -1.0, NULL, 0) == USTAB_OK);
  EXPECT(ustab_solve(cfg, &sol) == USTAB_E_INFEASIBLE_START);
  EXPECT(sol == NULL);
  EXPECT(strstr(ustab_last_error(), "InfeasibleStart") != NULL);
  EXPECT(!ustab_status_is_input_error(USTAB_E_INFEASIBLE_START));
  EXPECT(strcmp(ustab_status_name(USTAB_E_CONFIG), "ConfigError") == 0);
  ustab_config_free(cfg);
  cfg = NULL;

  /* unknown key and malformed text */
  EXPECT(ustab_config_parse("{\"markte\": {}}", &cfg) == USTAB_E_CONFIG);
  EXPECT(strstr(ustab_last_error(), "markte") != NULL);
  EXPECT(ustab_config_parse("{", &cfg) == USTAB_E_CONFIG);
  EXPECT(ustab_status_is_input_error(USTAB_E_CONFIG));
  EXPECT(ustab_solve(NULL, &sol) == USTAB_E_ARGUMENT);

  /* arbitrage market */
  EXPECT(ustab_config_parse("{\"market\": {\"s0\": [1.0], \"s1\": [[2.0], [1.5]], \"probabilities\": [0.5, 0.5]}}",
                            &cfg) == USTAB_OK);
  EXPECT(ustab_validate(cfg) == USTAB_E_NO_MARTINGALE_MEASURE);
  ustab_config_free(cfg);
  cfg = NULL;

  /* stability and counterexample through config files */
  if (argc > 1) {
    ustab_stability* st = NULL;
    ustab_counterexample* ce = NULL;
    ustab_record rec;
    ustab_counterexample_row row;
    snprintf(path, sizeof path, "%s/stability_constant.json", argv[1]);
    EXPECT(ustab_config_load(path, &cfg) == USTAB_OK);
    EXPECT(ustab_config_set_n_max(cfg, 20) == USTAB_OK);
    EXPECT(ustab_stability_run(cfg, &st) == USTAB_OK);
    EXPECT(ustab_stability_pass(st) == 1);
    EXPECT(ustab_stability_num_records(st) == 20);
    EXPECT(ustab_stability_record(st, 19, &rec) == USTAB_OK);
    EXPECT(rec.n == 20 && rec.tv == 0.0 && rec.kyfan_x < 1e-9);
    EXPECT(ustab_stability_record(st, 20, &rec) == USTAB_E_ARGUMENT);
    EXPECT(ustab_stability_write(st, "capi_out") == USTAB_OK);
    ustab_stability_free(st);
    ustab_config_free(cfg);

    snprintf(path, sizeof path, "%s/counterexample_flat.json", argv[1]);
    EXPECT(ustab_config_load(path, &cfg) == USTAB_OK);
    EXPECT(ustab_counterexample_run(cfg, &ce) == USTAB_OK);
    EXPECT(ustab_counterexample_num_rows(ce, 0) > 0);
    EXPECT(ustab_counterexample_row_at(ce, 0, 0, &row) == USTAB_OK);
    EXPECT(row.kyfan < 1e-9);
    EXPECT(!ustab_counterexample_diagonal_unstable(ce));
    ustab_counterexample_free(ce);
    ustab_config_free(cfg);

    snprintf(path, sizeof path, "%s/does_not_exist.json", argv[1]);
    EXPECT(ustab_config_load(path, &cfg) == USTAB_E_IO);
  }

  if (failures) fprintf(stderr, "%d C API checks failed\n", failures);
  else printf("C API checks passed (library %s)\n", ustab_version());
  return failures ? 1 : 0;
}
