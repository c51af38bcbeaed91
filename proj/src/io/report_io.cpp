#include "ustab/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "ustab/error.hpp"

namespace ustab {

namespace {

using json = nlohmann::json;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json vecs_json(const std::vector<Vector>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(vec_json(v));
  return a;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_number(row[i]);
    out += "\n";
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + target.parent_path().string() + ": " + ec.message());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename into " + path);
  }
}

// ---------------------------------------------------------------------------

SolveResult solve_instance(const BuiltProblem& problem, double x, const Vector& q, const SolverOptions& opts) {
  SolveResult s;
  const auto& p = problem.market.reference();
  s.primal = solve_primal(problem.model, p, problem.utility, x, q, opts);
  const Vector r = problem.model.num_claims() > 0 ? s.primal.price_gradient : Vector(0);
  s.dual = solve_dual(problem.model, p, DualFunction(problem.utility), s.primal.marginal, r, opts);
  s.link_residual = first_order_link_check(problem.model, p, s.primal, s.dual, problem.utility);
  if (problem.model.num_claims() > 0) {
    const auto set = marginal_price_set(superdifferential_u(problem.model, p, problem.utility, x, q, opts), problem.model);
    s.marginal_prices = set.prices;
    s.prices_within_closure = set.within_closure;
  }
  return s;
}

std::string solution_csv(const SolveResult& s) {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < s.primal.wealth.size(); ++i)
    rows.push_back({static_cast<double>(i), s.primal.wealth(i), s.primal.payoff(i), s.primal.density(i), s.dual.density(i),
                    s.dual.pricing_measure(i)});
  return csv_table({"atom", "wealth", "payoff", "marginal_utility", "dual_density", "pricing_measure"}, rows);
}

std::string solve_summary_json(const SolveResult& s, const BuiltProblem& problem) {
  json j;
  j["utility"] = problem.utility.describe();
  j["x"] = num(s.primal.x);
  j["q"] = vec_json(s.primal.q);
  j["u"] = num(s.primal.value);
  j["du_dx"] = num(s.primal.marginal);
  j["du_dq"] = vec_json(s.primal.price_gradient);
  j["v"] = num(s.dual.value);
  j["y"] = num(s.dual.y);
  j["r"] = vec_json(s.dual.r);
  j["dv_dy"] = num(s.dual.dv_dy);
  j["duality_gap"] = num(s.dual.value + s.primal.x * s.dual.y + (s.dual.r.size() ? s.primal.q.dot(s.dual.r) : 0.0) -
                         s.primal.value);
  j["first_order_link_residual"] = num(s.link_residual);
  j["primal_kkt_residual"] = num(s.primal.kkt_residual);
  j["dual_kkt_residual"] = num(s.dual.kkt_residual);
  j["primal_iterations"] = s.primal.iterations;
  j["dual_iterations"] = s.dual.iterations;
  j["degenerate"] = s.primal.degenerate;
  j["marginal_prices"] = vecs_json(s.marginal_prices);
  j["marginal_prices_within_closure"] = s.prices_within_closure;
  if (problem.model.price_set()) j["arbitrage_free_price_vertices"] = vecs_json(problem.model.price_set()->vertices());
  return dump(j);
}

std::string prices_summary_json(const BuiltProblem& problem, double x, const Vector& q, const SolverOptions& opts) {
  const auto& model = problem.model;
  const auto& f = model.endowments();
  json j;
  j["num_atoms"] = model.num_atoms();
  j["num_claims"] = model.num_claims();
  j["martingale_measure_vertices"] = vecs_json(model.polytope().vertices());
  j["analytic_center"] = vec_json(model.polytope().analytic_center());
  j["n_trad"] = check_n_trad(model.polytope(), f);
  Vector total = Vector::Zero(static_cast<Eigen::Index>(model.num_atoms()));
  for (Eigen::Index k = 0; k < f.payoffs().cols(); ++k) total += f.payoffs().col(k).cwiseAbs();
  j["superreplication_cost_abs_sum"] = num(superreplication_cost(model.polytope(), total));
  if (model.price_set()) {
    j["price_set_vertices"] = vecs_json(model.price_set()->vertices());
    j["price_set_open"] = model.price_set()->is_open();
    j["in_K"] = model.in_K(x, q);
    if (model.in_K(x, q)) {
      const auto set = marginal_price_set(superdifferential_u(model, problem.market.reference(), problem.utility, x, q, opts), model);
      j["marginal_prices"] = vecs_json(set.prices);
      j["marginal_prices_within_closure"] = set.within_closure;
    }
  }
  return dump(j);
}

std::string stability_csv(const ConvergenceReport& r) {
  std::vector<std::vector<double>> rows;
  for (const auto& s : r.records)
    rows.push_back({static_cast<double>(s.n), s.u, s.v, s.du_dx, s.dv_dy, s.kyfan_x, s.kyfan_y, s.hausdorff, s.tv,
                    s.v_at_limit_point});
  return csv_table({"n", "u_n", "v_n", "du_dx", "dv_dy", "kyfan_X", "kyfan_Y", "hausdorff_P", "tv_distance", "v_n_at_limit"},
                   rows);
}

std::string cm_csv(const CmDiagnostic& cm) {
  std::vector<std::string> header = {"m", "beta_m"};
  for (int n : cm.ns) header.push_back("p_n" + std::to_string(n));
  std::vector<std::vector<double>> rows;
  for (std::size_t m = 0; m < cm.beta.size(); ++m) {
    std::vector<double> row = {static_cast<double>(m + 1), cm.beta[m]};
    for (double p : cm.probability[m]) row.push_back(p);
    rows.push_back(std::move(row));
  }
  return csv_table(header, rows);
}

std::string stability_summary_json(const ConvergenceReport& r, const UiReport& ui, const CmDiagnostic& cm,
                                   std::uint64_t seed) {
  json j;
  j["verdict"] = r.pass() ? "PASS" : "FAIL";
  j["seed"] = seed;
  j["limits"] = {{"u", num(r.u_inf)}, {"v", num(r.v_inf)}, {"du_dx", num(r.du_dx_inf)}, {"dv_dy", num(r.dv_dy_inf)},
                 {"marginal_prices", vecs_json(r.prices_inf)}};
  j["final_deviations"] = {{"u", num(r.dev_u)},         {"v", num(r.dev_v)},
                           {"du_dx", num(r.dev_du_dx)}, {"dv_dy", num(r.dev_dv_dy)},
                           {"kyfan_X", num(r.final_kyfan_x)}, {"kyfan_Y", num(r.final_kyfan_y)}};
  json n0 = json::array();
  for (const auto& [eps, n] : r.hausdorff_n0) n0.push_back({{"eps", eps}, {"n0", n}});
  j["hausdorff_n0"] = n0;
  j["semicontinuity"] = {{"liminf_v", num(r.liminf_v)}, {"limsup_v", num(r.limsup_v)}, {"v", num(r.v_inf)}};
  j["clauses"] = {{"values", r.values_pass},
                  {"kyfan", r.kyfan_pass},
                  {"hausdorff", r.hausdorff_pass},
                  {"lower_semicontinuity", r.lower_semicontinuity_pass},
                  {"upper_semicontinuity", r.upper_semicontinuity_pass}};
  j["ui"] = {{"finite_space_ui", ui.finite_space_ui},
             {"xi_max", num(ui.xi_max)},
             {"measure", vec_json(ui.measure)},
             {"bounded_above", ui.bounded_above},
             {"upper_bound", num(ui.upper_bound)},
             {"power_moment", ui.power_moment},
             {"growth_alpha", num(ui.growth.alpha)},
             {"growth_c", num(ui.growth.c)},
             {"growth_d", num(ui.growth.d)},
             {"p_hat", num(ui.p_hat)},
             {"q_hat_min", num(ui.q_hat_min)},
             {"q_hat", num(ui.q_hat)},
             {"gamma", num(ui.gamma)},
             {"density_moment", num(ui.density_moment)},
             {"inverse_density_moment", num(ui.inverse_density_moment)},
             {"holder_bound_holds", ui.holder_bound_holds},
             {"power_moment_note", ui.power_moment_note},
             {"uniform_rae", ui.uniform_rae},
             {"rae_delta", num(ui.rae_delta)},
             {"rae_x0", num(ui.rae_x0)}};
  json beta = json::array();
  for (double b : cm.beta) beta.push_back(num(b));
  j["beta_m"] = beta;
  return dump(j);
}

std::string counterexample_csv(const std::vector<CounterexampleRow>& rows) {
  std::vector<std::vector<double>> out;
  for (const auto& r : rows) out.push_back({static_cast<double>(r.m), static_cast<double>(r.n), r.tv, r.kyfan, r.orlicz});
  return csv_table({"m", "n", "tv", "kyfan", "orlicz"}, out);
}

std::string counterexample_summary_json(const CounterexampleReport& r) {
  json j;
  j["fixed_converges"] = r.fixed_converges;
  j["diagonal_unstable"] = r.diagonal_unstable;
  if (!r.fixed.empty()) j["fixed_final_kyfan"] = num(r.fixed.back().kyfan);
  if (!r.diagonal.empty()) {
    j["diagonal_final_kyfan"] = num(r.diagonal.back().kyfan);
    j["diagonal_final_tv"] = num(r.diagonal.back().tv);
    j["diagonal_final_n"] = r.diagonal.back().n;
  }
  return dump(j);
}

}  // namespace ustab
