// Command-line front end over the C API.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ustab/ustab.h"

namespace {

enum class Level { kQuiet = 0, kError = 1, kInfo = 2, kDebug = 3 };

Level log_level() {
  const char* env = std::getenv("USTAB_LOG");
  if (!env) return Level::kInfo;
  const std::string v = env;
  if (v == "quiet" || v == "0") return Level::kQuiet;
  if (v == "error" || v == "1") return Level::kError;
  if (v == "debug" || v == "3") return Level::kDebug;
  return Level::kInfo;
}

template <class... A>
void log(Level at, const char* fmt, A... args) {
  if (static_cast<int>(at) > static_cast<int>(log_level())) return;
  std::fprintf(stderr, "ustab: ");
  if constexpr (sizeof...(A) == 0)
    std::fputs(fmt, stderr);
  else
    std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int n_max = 0;
  double tol = 0.0;
  double x = 0.0;
  bool x_set = false;
  std::vector<double> q;
};

// 0 ok, 2 input error, 3 solver error
int fail(ustab_status s) {
  const bool input = ustab_status_is_input_error(s);
  const char* msg = ustab_last_error();
  log(Level::kError, "%s", *msg ? msg : ustab_status_name(s));
  return input ? 2 : 3;
}

struct ConfigHandle {
  ustab_config* cfg = nullptr;
  ~ConfigHandle() { ustab_config_free(cfg); }
};

// Loads the config and applies command-line overrides.
int load(const Options& o, ConfigHandle& h) {
  if (auto s = ustab_config_load(o.config.c_str(), &h.cfg); s != USTAB_OK) return fail(s);
  if (o.seed_set) ustab_config_set_seed(h.cfg, o.seed);
  if (o.n_max > 0) ustab_config_set_n_max(h.cfg, o.n_max);
  if (o.tol > 0.0) ustab_config_set_tol(h.cfg, o.tol);
  if (o.x_set) ustab_config_set_point(h.cfg, o.x, o.q.data(), o.q.size());
  if (!o.out.empty()) ustab_config_set_out_dir(h.cfg, o.out.c_str());
  return 0;
}

int cmd_validate(const Options& o) {
  ConfigHandle h;
  if (int rc = load(o, h)) return rc;
  if (auto s = ustab_validate(h.cfg); s != USTAB_OK) return fail(s);
  std::printf("config ok\n");
  return 0;
}

int cmd_solve(const Options& o) {
  ConfigHandle h;
  if (int rc = load(o, h)) return rc;
  ustab_solution* sol = nullptr;
  if (auto s = ustab_solve(h.cfg, &sol); s != USTAB_OK) return fail(s);
  const std::string dir = ustab_config_out_dir(h.cfg);
  const auto ws = ustab_solution_write(sol, dir.c_str());
  std::printf("u = %.12g\nv = %.12g\ndu/dx = %.12g\nlink residual = %.3g\n", ustab_solution_value(sol),
              ustab_solution_dual_value(sol), ustab_solution_marginal(sol), ustab_solution_link_residual(sol));
  ustab_solution_free(sol);
  if (ws != USTAB_OK) return fail(ws);
  log(Level::kInfo, "wrote %s/solution.csv and summary.json", dir.c_str());
  return 0;
}

int cmd_prices(const Options& o) {
  ConfigHandle h;
  if (int rc = load(o, h)) return rc;
  const std::string dir = ustab_config_out_dir(h.cfg);
  if (auto s = ustab_prices_write(h.cfg, dir.c_str()); s != USTAB_OK) return fail(s);
  log(Level::kInfo, "wrote %s/prices.json", dir.c_str());
  return 0;
}

int cmd_stability(const Options& o) {
  ConfigHandle h;
  if (int rc = load(o, h)) return rc;
  if (auto s = ustab_validate(h.cfg); s != USTAB_OK) return fail(s);
  ustab_stability* rep = nullptr;
  if (auto s = ustab_stability_run(h.cfg, &rep); s != USTAB_OK) return fail(s);
  const std::string dir = ustab_config_out_dir(h.cfg);
  const auto ws = ustab_stability_write(rep, dir.c_str());
  const bool pass = ustab_stability_pass(rep);
  const size_t n = ustab_stability_num_records(rep);
  if (n > 0 && log_level() >= Level::kDebug) {
    ustab_record r{};
    ustab_stability_record(rep, n - 1, &r);
    log(Level::kDebug, "final n = %d: u %.12g v %.12g kyfan %.3g/%.3g", r.n, r.u, r.v, r.kyfan_x, r.kyfan_y);
  }
  std::printf("%s (%zu indices)\n", pass ? "PASS" : "FAIL", n);
  ustab_stability_free(rep);
  if (ws != USTAB_OK) return fail(ws);
  log(Level::kInfo, "wrote %s/stability.csv, cm.csv and stability_summary.json", dir.c_str());
  return pass ? 0 : 1;
}

int cmd_counterexample(const Options& o) {
  ConfigHandle h;
  if (int rc = load(o, h)) return rc;
  ustab_counterexample* rep = nullptr;
  if (auto s = ustab_counterexample_run(h.cfg, &rep); s != USTAB_OK) return fail(s);
  const std::string dir = ustab_config_out_dir(h.cfg);
  const auto ws = ustab_counterexample_write(rep, dir.c_str());
  for (int diag : {1, 0}) {
    const size_t rows = ustab_counterexample_num_rows(rep, diag);
    if (rows == 0) continue;
    ustab_counterexample_row r{};
    ustab_counterexample_row_at(rep, diag, rows - 1, &r);
    std::printf("%s: m = %d, n = %d, tv = %.3g, kyfan = %.3g\n", diag ? "diagonal" : "fixed", r.m, r.n, r.tv, r.kyfan);
  }
  std::printf("fixed level converges: %s\ndiagonal unstable: %s\n", ustab_counterexample_fixed_converges(rep) ? "yes" : "no",
              ustab_counterexample_diagonal_unstable(rep) ? "yes" : "no");
  ustab_counterexample_free(rep);
  if (ws != USTAB_OK) return fail(ws);
  log(Level::kInfo, "wrote %s/counterexample_*.csv", dir.c_str());
  return 0;
}

void common(CLI::App* sub, Options& o) {
  sub->add_option("--config,-c", o.config, "experiment configuration (JSON)")->required();
  sub->add_option("--out,-o", o.out, "output directory (overrides output.dir)");
  sub->add_option("--tol", o.tol, "solver KKT tolerance")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Utility maximization duality and stability experiments on finite markets"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "check a configuration without solving");
  common(validate, o);
  validate->add_option("--n-max", o.n_max, "family length to validate")->check(CLI::PositiveNumber);

  auto* solve = app.add_subcommand("solve", "solve the primal and dual problems at one point");
  common(solve, o);
  solve->add_option("--x", o.x, "initial wealth")->each([&](const std::string&) { o.x_set = true; });
  solve->add_option("--q", o.q, "claim holdings, one per claim")->delimiter(',');

  auto* prices = app.add_subcommand("prices", "price sets and marginal utility-based prices");
  common(prices, o);
  prices->add_option("--x", o.x, "initial wealth")->each([&](const std::string&) { o.x_set = true; });
  prices->add_option("--q", o.q, "claim holdings")->delimiter(',');

  auto* stability = app.add_subcommand("stability", "run a perturbation family and report convergence");
  common(stability, o);
  stability->add_option("--n-max", o.n_max, "last index of the family")->check(CLI::PositiveNumber);
  stability->add_option("--seed", o.seed, "seed for randomized family parameters")->each([&](const std::string&) {
    o.seed_set = true;
  });

  auto* counter = app.add_subcommand("counterexample", "diagonal refinement of a binomial lattice");
  common(counter, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (!o.q.empty() && !o.x_set) {
    log(Level::kError, "--q needs --x");
    return 2;
  }

  if (*validate) return cmd_validate(o);
  if (*solve) return cmd_solve(o);
  if (*prices) return cmd_prices(o);
  if (*stability) return cmd_stability(o);
  return cmd_counterexample(o);
}
