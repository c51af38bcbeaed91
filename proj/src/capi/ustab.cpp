#include "ustab/ustab.h"

#include <algorithm>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "ustab/config.hpp"
#include "ustab/error.hpp"
#include "ustab/report_io.hpp"
#include "ustab/stability.hpp"

struct ustab_config {
  ustab::ExperimentConfig cfg;
};

struct ustab_solution {
  ustab::SolveResult result;
  std::string summary;
};

struct ustab_stability {
  ustab::ConvergenceReport report;
  ustab::UiReport ui;
  ustab::CmDiagnostic cm;
  std::uint64_t seed = 0;
};

struct ustab_counterexample {
  ustab::CounterexampleReport report;
};

namespace {

thread_local std::string last_error;

ustab_status to_status(ustab::ErrorCode c) {
  using ustab::ErrorCode;
  switch (c) {
    case ErrorCode::kInvalidSpec: return USTAB_E_INVALID_SPEC;
    case ErrorCode::kNonPositiveProbability: return USTAB_E_NON_POSITIVE_PROBABILITY;
    case ErrorCode::kDisconnectedTree: return USTAB_E_DISCONNECTED_TREE;
    case ErrorCode::kDegenerateBranching: return USTAB_E_DEGENERATE_BRANCHING;
    case ErrorCode::kNoMartingaleMeasure: return USTAB_E_NO_MARTINGALE_MEASURE;
    case ErrorCode::kEmptyBundle: return USTAB_E_EMPTY_BUNDLE;
    case ErrorCode::kConjugateDiverges: return USTAB_E_CONJUGATE_DIVERGES;
    case ErrorCode::kBoundaryPoint: return USTAB_E_BOUNDARY_POINT;
    case ErrorCode::kNotApplicable: return USTAB_E_NOT_APPLICABLE;
    case ErrorCode::kNoPowerBound: return USTAB_E_NO_POWER_BOUND;
    case ErrorCode::kInfeasibleStart: return USTAB_E_INFEASIBLE_START;
    case ErrorCode::kSolverDiverged: return USTAB_E_SOLVER_DIVERGED;
    case ErrorCode::kMismatchedPair: return USTAB_E_MISMATCHED_PAIR;
    case ErrorCode::kEmptySet: return USTAB_E_EMPTY_SET;
    case ErrorCode::kConfig: return USTAB_E_CONFIG;
    case ErrorCode::kIo: return USTAB_E_IO;
  }
  return USTAB_E_INTERNAL;
}

template <class F>
ustab_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return USTAB_OK;
  } catch (const ustab::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return USTAB_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = std::string("internal error: ") + e.what();
    return USTAB_E_INTERNAL;
  }
}

ustab_status bad_argument(const char* what) {
  last_error = std::string("bad argument: ") + what;
  return USTAB_E_ARGUMENT;
}

std::string join(const char* dir, const char* file) {
  std::string d = dir ? dir : ".";
  if (!d.empty() && d.back() != '/') d += '/';
  return d + file;
}

ustab::Vector q_of(const ustab::ExperimentConfig& cfg, std::size_t claims) {
  ustab::Vector q = ustab::Vector::Zero(static_cast<Eigen::Index>(claims));
  if (!cfg.q.empty()) {
    if (cfg.q.size() != claims) throw ustab::Error(ustab::ErrorCode::kConfig, "point.q must list one entry per claim");
    for (std::size_t i = 0; i < claims; ++i) q(static_cast<Eigen::Index>(i)) = cfg.q[i];
  }
  return q;
}

size_t copy_out(const ustab::Vector& v, double* buf, size_t cap) {
  const auto n = static_cast<size_t>(v.size());
  if (buf)
    for (size_t i = 0; i < n && i < cap; ++i) buf[i] = v(static_cast<Eigen::Index>(i));
  return n;
}

}  // namespace

extern "C" {

const char* ustab_last_error(void) { return last_error.c_str(); }

const char* ustab_status_name(ustab_status status) {
  switch (status) {
    case USTAB_OK: return "Ok";
    case USTAB_E_ARGUMENT: return "BadArgument";
    case USTAB_E_INTERNAL: return "Internal";
    default: break;
  }
  if (status >= USTAB_E_INVALID_SPEC && status <= USTAB_E_IO)
    return ustab::error_code_name(static_cast<ustab::ErrorCode>(status - 1));
  return "Unknown";
}

int ustab_status_is_input_error(ustab_status s) {
  switch (s) {
    case USTAB_E_INVALID_SPEC:
    case USTAB_E_NON_POSITIVE_PROBABILITY:
    case USTAB_E_DISCONNECTED_TREE:
    case USTAB_E_DEGENERATE_BRANCHING:
    case USTAB_E_NO_MARTINGALE_MEASURE:
    case USTAB_E_EMPTY_BUNDLE:
    case USTAB_E_CONFIG:
    case USTAB_E_IO:
    case USTAB_E_ARGUMENT:
      return 1;
    default:
      return 0;
  }
}

const char* ustab_version(void) { return "0.1.0"; }

ustab_status ustab_config_load(const char* path, ustab_config** out) {
  if (!path || !out) return bad_argument("null path or output");
  return guarded([&] { *out = new ustab_config{ustab::load_config(path)}; });
}

ustab_status ustab_config_parse(const char* json, ustab_config** out) {
  if (!json || !out) return bad_argument("null text or output");
  return guarded([&] { *out = new ustab_config{ustab::parse_config(json)}; });
}

void ustab_config_free(ustab_config* cfg) { delete cfg; }

ustab_status ustab_config_set_seed(ustab_config* cfg, uint64_t seed) {
  if (!cfg) return bad_argument("null config");
  cfg->cfg.seed = seed;
  return USTAB_OK;
}

ustab_status ustab_config_set_n_max(ustab_config* cfg, int n_max) {
  if (!cfg) return bad_argument("null config");
  if (n_max < 1) return bad_argument("n_max must be at least 1");
  cfg->cfg.stability.n_max = n_max;
  return USTAB_OK;
}

ustab_status ustab_config_set_tol(ustab_config* cfg, double tol) {
  if (!cfg) return bad_argument("null config");
  if (!(tol > 0.0)) return bad_argument("tolerance must be positive");
  cfg->cfg.solver.tol = tol;
  return USTAB_OK;
}

ustab_status ustab_config_set_point(ustab_config* cfg, double x, const double* q, size_t nq) {
  if (!cfg || (nq > 0 && !q)) return bad_argument("null config or q");
  cfg->cfg.x = x;
  cfg->cfg.q.assign(q, q + nq);
  return USTAB_OK;
}

ustab_status ustab_config_set_out_dir(ustab_config* cfg, const char* dir) {
  if (!cfg || !dir) return bad_argument("null config or directory");
  cfg->cfg.out_dir = dir;
  return USTAB_OK;
}

const char* ustab_config_out_dir(const ustab_config* cfg) { return cfg ? cfg->cfg.out_dir.c_str() : ""; }

ustab_status ustab_validate(const ustab_config* cfg) {
  if (!cfg) return bad_argument("null config");
  return guarded([&] {
    const auto prob = ustab::build_problem(cfg->cfg);
    if (cfg->cfg.family) {
      const auto& p = prob.market.reference();
      ustab::validate_family(prob.model, p, ustab::make_family(cfg->cfg, p), cfg->cfg.stability.n_max);
    }
  });
}

ustab_status ustab_solve(const ustab_config* cfg, ustab_solution** out) {
  if (!cfg || !out) return bad_argument("null config or output");
  return guarded([&] {
    const auto prob = ustab::build_problem(cfg->cfg);
    auto* s = new ustab_solution;
    try {
      s->result = ustab::solve_instance(prob, cfg->cfg.x, q_of(cfg->cfg, prob.model.num_claims()), cfg->cfg.solver);
      s->summary = ustab::solve_summary_json(s->result, prob);
    } catch (...) {
      delete s;
      throw;
    }
    *out = s;
  });
}

void ustab_solution_free(ustab_solution* s) { delete s; }
double ustab_solution_value(const ustab_solution* s) { return s ? s->result.primal.value : 0.0; }
double ustab_solution_dual_value(const ustab_solution* s) { return s ? s->result.dual.value : 0.0; }
double ustab_solution_marginal(const ustab_solution* s) { return s ? s->result.primal.marginal : 0.0; }
double ustab_solution_link_residual(const ustab_solution* s) { return s ? s->result.link_residual : 0.0; }

size_t ustab_solution_wealth(const ustab_solution* s, double* buf, size_t cap) {
  return s ? copy_out(s->result.primal.wealth, buf, cap) : 0;
}

size_t ustab_solution_dual_density(const ustab_solution* s, double* buf, size_t cap) {
  return s ? copy_out(s->result.dual.density, buf, cap) : 0;
}

ustab_status ustab_solution_write(const ustab_solution* s, const char* dir) {
  if (!s) return bad_argument("null solution");
  return guarded([&] {
    const std::string csv = ustab::solution_csv(s->result);
    ustab::write_file_atomic(join(dir, "solution.csv"), csv);
    ustab::write_file_atomic(join(dir, "summary.json"), s->summary);
  });
}

ustab_status ustab_prices_write(const ustab_config* cfg, const char* dir) {
  if (!cfg) return bad_argument("null config");
  return guarded([&] {
    const auto prob = ustab::build_problem(cfg->cfg);
    const auto text =
        ustab::prices_summary_json(prob, cfg->cfg.x, q_of(cfg->cfg, prob.model.num_claims()), cfg->cfg.solver);
    ustab::write_file_atomic(join(dir, "prices.json"), text);
  });
}

ustab_status ustab_stability_run(const ustab_config* cfg, ustab_stability** out) {
  if (!cfg || !out) return bad_argument("null config or output");
  return guarded([&] {
    const auto& c = cfg->cfg;
    if (!c.family) throw ustab::Error(ustab::ErrorCode::kConfig, "config: the stability command needs a family");
    const auto prob = ustab::build_problem(c);
    const auto& p = prob.market.reference();
    const auto fam = ustab::make_family(c, p);
    const int n_max = c.stability.ns.empty() ? c.stability.n_max : *std::max_element(c.stability.ns.begin(), c.stability.ns.end());
    ustab::validate_family(prob.model, p, fam, n_max);
    auto s = std::make_unique<ustab_stability>();
    s->report = ustab::run_stability_experiment(prob.model, p, fam, n_max, c.stability.thresholds, c.stability.ns, c.solver);
    const ustab::Vector price = prob.model.num_claims() > 0 ? ustab::Vector(fam.r / fam.y) : ustab::Vector(0);
    s->ui = ustab::ui_condition_report(prob.model, p, fam, price, n_max, c.stability.q_hat_factor);
    std::vector<int> cm_ns;
    for (int n : c.stability.cm_ns)
      if (n <= n_max) cm_ns.push_back(n);
    s->cm = ustab::cm_diagnostic(prob.model, p, fam, c.stability.m_max, cm_ns, c.solver);
    s->seed = c.seed;
    *out = s.release();
  });
}

void ustab_stability_free(ustab_stability* s) { delete s; }
int ustab_stability_pass(const ustab_stability* s) { return s && s->report.pass() ? 1 : 0; }
size_t ustab_stability_num_records(const ustab_stability* s) { return s ? s->report.records.size() : 0; }

ustab_status ustab_stability_record(const ustab_stability* s, size_t i, ustab_record* out) {
  if (!s || !out || i >= s->report.records.size()) return bad_argument("null handle or index out of range");
  const auto& r = s->report.records[i];
  *out = {r.n, r.u, r.v, r.du_dx, r.dv_dy, r.kyfan_x, r.kyfan_y, r.hausdorff, r.tv, r.v_at_limit_point};
  return USTAB_OK;
}

ustab_status ustab_stability_write(const ustab_stability* s, const char* dir) {
  if (!s) return bad_argument("null report");
  return guarded([&] {
    const auto csv = ustab::stability_csv(s->report);
    const auto cm = ustab::cm_csv(s->cm);
    const auto summary = ustab::stability_summary_json(s->report, s->ui, s->cm, s->seed);
    ustab::write_file_atomic(join(dir, "stability.csv"), csv);
    ustab::write_file_atomic(join(dir, "cm.csv"), cm);
    ustab::write_file_atomic(join(dir, "stability_summary.json"), summary);
  });
}

ustab_status ustab_counterexample_run(const ustab_config* cfg, ustab_counterexample** out) {
  if (!cfg || !out) return bad_argument("null config or output");
  return guarded([&] {
    ustab::SolverOptions opts = cfg->cfg.solver;
    *out = new ustab_counterexample{ustab::counterexample_experiment(cfg->cfg.counterexample, opts)};
  });
}

void ustab_counterexample_free(ustab_counterexample* c) { delete c; }

size_t ustab_counterexample_num_rows(const ustab_counterexample* c, int diagonal) {
  if (!c) return 0;
  return diagonal ? c->report.diagonal.size() : c->report.fixed.size();
}

ustab_status ustab_counterexample_row_at(const ustab_counterexample* c, int diagonal, size_t i,
                                         ustab_counterexample_row* out) {
  if (!c || !out) return bad_argument("null handle");
  const auto& rows = diagonal ? c->report.diagonal : c->report.fixed;
  if (i >= rows.size()) return bad_argument("row index out of range");
  const auto& r = rows[i];
  *out = {r.m, r.n, r.tv, r.kyfan, r.orlicz};
  return USTAB_OK;
}

int ustab_counterexample_fixed_converges(const ustab_counterexample* c) { return c && c->report.fixed_converges; }
int ustab_counterexample_diagonal_unstable(const ustab_counterexample* c) { return c && c->report.diagonal_unstable; }

ustab_status ustab_counterexample_write(const ustab_counterexample* c, const char* dir) {
  if (!c) return bad_argument("null report");
  return guarded([&] {
    const auto diag = ustab::counterexample_csv(c->report.diagonal);
    const auto fixed = ustab::counterexample_csv(c->report.fixed);
    const auto summary = ustab::counterexample_summary_json(c->report);
    ustab::write_file_atomic(join(dir, "counterexample_diagonal.csv"), diag);
    ustab::write_file_atomic(join(dir, "counterexample_fixed.csv"), fixed);
    ustab::write_file_atomic(join(dir, "counterexample_summary.json"), summary);
  });
}

}  // extern "C"
