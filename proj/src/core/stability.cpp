#include "ustab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ustab/error.hpp"
#include "ustab/polyhedra.hpp"

namespace ustab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string at_n(int n) { return "n = " + std::to_string(n); }

Vector or_zero(const Vector& v, Eigen::Index size) { return v.size() == 0 ? Vector(Vector::Zero(size)) : v; }

// indices 1..n_max thinned geometrically, always ending at n_max
std::vector<int> sampled_indices(int n_max) {
  std::vector<int> out;
  for (int n = 1; n <= n_max;) {
    out.push_back(n);
    n = std::max(n + 1, static_cast<int>(std::lround(n * 1.5)));
  }
  if (out.empty() || out.back() != n_max) out.push_back(n_max);
  return out;
}

// Maximizer of sum log Q over the martingale measures pricing f at `price`,
// started from a strictly positive member of that slice.
Vector slice_analytic_center(const MarketModel& model, Vector q) {
  const Matrix& a = model.polytope().constraints();
  const auto n = q.size();
  const auto nf = static_cast<Eigen::Index>(model.num_claims());
  Matrix eq(a.rows() + 1 + nf, n);
  if (a.rows() > 0) eq.topRows(a.rows()) = a;
  eq.row(a.rows()) = Vector::Ones(n).transpose();
  if (nf > 0) eq.bottomRows(nf) = model.endowments().payoffs().transpose();
  const Matrix z = null_space(eq, 1e-12);
  if (z.cols() == 0) return q;
  for (int iter = 0; iter < 100; ++iter) {
    const Vector grad = q.cwiseInverse();
    const Vector g = z.transpose() * grad;
    if (g.cwiseAbs().maxCoeff() < 1e-12) break;
    const Matrix h = z.transpose() * grad.cwiseAbs2().asDiagonal() * z;
    const Vector step = z * h.ldlt().solve(g);
    double t = 1.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (step(i) < 0.0) t = std::min(t, -0.95 * q(i) / step(i));
    const double f0 = q.array().log().sum();
    while (t > 1e-14 && (q + t * step).array().log().sum() < f0 + 1e-4 * t * grad.dot(step)) t *= 0.5;
    q += t * step;
    if (t * step.cwiseAbs().maxCoeff() < 1e-15) break;
  }
  return q;
}

double tail_min(const std::vector<StabilityRecord>& rs, int from, double StabilityRecord::*field) {
  double out = kInf;
  for (const auto& r : rs)
    if (r.n >= from) out = std::min(out, r.*field);
  return out;
}

double tail_max(const std::vector<StabilityRecord>& rs, int from, double StabilityRecord::*field) {
  double out = -kInf;
  for (const auto& r : rs)
    if (r.n >= from) out = std::max(out, r.*field);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

PerturbationFamily drift_family(const DriftFamilySpec& spec) {
  PerturbationFamily fam;
  const Vector zeta = spec.zeta;
  fam.density = [zeta](int n) -> Vector { return Vector::Ones(zeta.size()) + zeta / static_cast<double>(n); };
  if (spec.log_utility) {
    fam.limit_utility = UtilityFunction::log().normalized();
    const UtilityFunction lim = fam.limit_utility;
    fam.utility = [lim](int) { return lim; };
  } else {
    const double a = spec.alpha, a0 = spec.alpha_start;
    fam.limit_utility = UtilityFunction::power(a).normalized();
    fam.utility = [a, a0](int n) { return UtilityFunction::power(a + (a0 - a) / static_cast<double>(n)).normalized(); };
  }
  const auto nq = std::max(spec.q.size(), spec.dq.size());
  const auto nr = std::max(spec.r.size(), spec.dr.size());
  const Vector q = or_zero(spec.q, nq), dq = or_zero(spec.dq, nq);
  const Vector r = or_zero(spec.r, nr), dr = or_zero(spec.dr, nr);
  const double x = spec.x, dx = spec.dx, y = spec.y, dy = spec.dy;
  fam.primal_point = [=](int n) {
    const double k = 1.0 / static_cast<double>(n);
    return std::make_pair(x + dx * k, Vector(q + dq * k));
  };
  fam.dual_point = [=](int n) {
    const double k = 1.0 / static_cast<double>(n);
    return std::make_pair(y + dy * k, Vector(r + dr * k));
  };
  fam.x = x;
  fam.q = q;
  fam.y = y;
  fam.r = r;
  return fam;
}

void validate_family(const MarketModel& model, const ProbabilityMeasure& p, const PerturbationFamily& family, int n_max) {
  if (n_max < 1) throw Error(ErrorCode::kInvalidSpec, "n_max must be at least 1");
  if (!p.equivalent()) throw Error(ErrorCode::kNonPositiveProbability, "the reference measure must charge every atom");
  const auto nf = static_cast<Eigen::Index>(model.num_claims());
  if (family.q.size() != nf || family.r.size() != nf)
    throw Error(ErrorCode::kInvalidSpec, "limit points do not match the number of claims");
  if (!model.in_K(family.x, family.q)) throw Error(ErrorCode::kInfeasibleStart, "limit (x, q) is not in K");
  if (!model.in_L(family.y, family.r)) throw Error(ErrorCode::kInfeasibleStart, "limit (y, r) is not in L");
  for (int n = 1; n <= n_max; ++n) {
    const Vector z = family.density(n);
    if (z.size() != static_cast<Eigen::Index>(p.size()))
      throw Error(ErrorCode::kInvalidSpec, "density has the wrong number of atoms at " + at_n(n));
    if (!(z.minCoeff() > 0.0) || !z.allFinite())
      throw Error(ErrorCode::kNonPositiveProbability, "density is not strictly positive at " + at_n(n));
    if (std::abs(p.expectation(z) - 1.0) > 1e-10)
      throw Error(ErrorCode::kInvalidSpec, "density does not integrate to one at " + at_n(n));
    const auto [x, q] = family.primal_point(n);
    const auto [y, r] = family.dual_point(n);
    if (q.size() != nf || r.size() != nf) throw Error(ErrorCode::kInvalidSpec, "point dimension mismatch at " + at_n(n));
    if (!model.in_K(x, q)) throw Error(ErrorCode::kInfeasibleStart, "(x_n, q_n) is not in K at " + at_n(n));
    if (!model.in_L(y, r)) throw Error(ErrorCode::kInfeasibleStart, "(y_n, r_n) is not in L at " + at_n(n));
  }
}

double kyfan_distance(const Vector& a, const Vector& b, const ProbabilityMeasure& p) {
  if (a.size() != b.size() || a.size() != static_cast<Eigen::Index>(p.size()))
    throw Error(ErrorCode::kInvalidSpec, "Ky-Fan distance between vectors on different atom spaces");
  return p.expectation((a - b).cwiseAbs().cwiseMin(1.0));
}

double one_sided_hausdorff(const std::vector<Vector>& from, const std::vector<Vector>& to) {
  if (from.empty() || to.empty()) throw Error(ErrorCode::kEmptySet, "Hausdorff distance with an empty set");
  double out = 0.0;
  for (const auto& x : from) out = std::max(out, distance_to_hull(x, to));
  return out;
}

std::vector<std::pair<double, int>> first_index_below(const std::vector<int>& ns, const std::vector<double>& dist,
                                                      const std::vector<double>& eps) {
  std::vector<std::pair<double, int>> out;
  for (double e : eps) {
    int n0 = -1;
    for (std::size_t i = ns.size(); i-- > 0;) {
      if (!(dist[i] < e)) break;
      n0 = ns[i];
    }
    out.emplace_back(e, n0);
  }
  return out;
}

bool ConvergenceReport::pass() const {
  return values_pass && kyfan_pass && hausdorff_pass && lower_semicontinuity_pass && upper_semicontinuity_pass;
}

ConvergenceReport run_stability_experiment(const MarketModel& model, const ProbabilityMeasure& p,
                                           const PerturbationFamily& family, int n_max,
                                           const StabilityThresholds& thresholds, std::vector<int> ns,
                                           const SolverOptions& opts) {
  if (ns.empty())
    for (int n = 1; n <= n_max; ++n) ns.push_back(n);
  std::sort(ns.begin(), ns.end());
  if (ns.front() < 1) throw Error(ErrorCode::kInvalidSpec, "indices start at 1");
  const bool has_claims = model.num_claims() > 0;

  ConvergenceReport rep;
  const UtilityFunction& u_lim = family.limit_utility;
  const DualFunction v_lim(u_lim);
  const auto primal_inf = solve_primal(model, p, u_lim, family.x, family.q, opts);
  const auto dual_inf = solve_dual(model, p, v_lim, family.y, family.r, opts);
  rep.u_inf = primal_inf.value;
  rep.du_dx_inf = primal_inf.marginal;
  rep.v_inf = dual_inf.value;
  rep.dv_dy_inf = dual_inf.dv_dy;
  if (has_claims)
    rep.prices_inf = marginal_price_set(superdifferential_u(model, p, u_lim, family.x, family.q, opts), model).prices;

  std::vector<double> haus;
  for (int n : ns) {
    try {
      const ProbabilityMeasure pn = p.reweighted(family.density(n));
      const UtilityFunction un = family.utility(n);
      const DualFunction vn(un);
      const auto [x, q] = family.primal_point(n);
      const auto [y, r] = family.dual_point(n);
      const auto primal = solve_primal(model, pn, un, x, q, opts);
      const auto dual = solve_dual(model, pn, vn, y, r, opts);
      StabilityRecord rec;
      rec.n = n;
      rec.u = primal.value;
      rec.v = dual.value;
      rec.du_dx = primal.marginal;
      rec.dv_dy = dual.dv_dy;
      rec.kyfan_x = kyfan_distance(primal.wealth, primal_inf.wealth, p);
      rec.kyfan_y = kyfan_distance(dual.density, dual_inf.density, p);
      if (has_claims) {
        const auto prices = marginal_price_set(superdifferential_u(model, pn, un, x, q, opts), model).prices;
        rec.hausdorff = one_sided_hausdorff(prices, rep.prices_inf);
      }
      rec.tv = total_variation(pn, p);
      rec.v_at_limit_point = solve_dual(model, pn, vn, family.y, family.r, opts).value;
      haus.push_back(rec.hausdorff);
      rep.records.push_back(rec);
    } catch (const Error& e) {
      throw Error(e.code(), "at " + at_n(n) + ": " + e.what());
    }
  }

  const auto& last = rep.records.back();
  rep.dev_u = std::abs(last.u - rep.u_inf);
  rep.dev_v = std::abs(last.v - rep.v_inf);
  rep.dev_du_dx = std::abs(last.du_dx - rep.du_dx_inf);
  rep.dev_dv_dy = std::abs(last.dv_dy - rep.dv_dy_inf);
  rep.final_kyfan_x = last.kyfan_x;
  rep.final_kyfan_y = last.kyfan_y;
  rep.hausdorff_n0 = first_index_below(ns, haus, thresholds.eps_ladder);

  const int tail_from = std::max(ns.front(), static_cast<int>(std::ceil(0.9 * last.n)));
  rep.liminf_v = tail_min(rep.records, tail_from, &StabilityRecord::v_at_limit_point);
  rep.limsup_v = tail_max(rep.records, tail_from, &StabilityRecord::v_at_limit_point);

  const double tv = thresholds.value;
  rep.values_pass = rep.dev_u < tv && rep.dev_v < tv && rep.dev_du_dx < tv && rep.dev_dv_dy < tv;
  rep.kyfan_pass = rep.final_kyfan_x < thresholds.kyfan && rep.final_kyfan_y < thresholds.kyfan;
  rep.hausdorff_pass = first_index_below(ns, haus, {thresholds.hausdorff}).front().second != -1;
  rep.lower_semicontinuity_pass = rep.liminf_v >= rep.v_inf - tv;
  rep.upper_semicontinuity_pass = rep.limsup_v <= rep.v_inf + tv;
  return rep;
}

// ---------------------------------------------------------------------------

UiReport ui_condition_report(const MarketModel& model, const ProbabilityMeasure& p, const PerturbationFamily& family,
                             const Vector& price, int n_max, double q_hat_factor) {
  UiReport rep;
  const auto nf = static_cast<Eigen::Index>(model.num_claims());
  if (price.size() != nf) throw Error(ErrorCode::kInvalidSpec, "price has the wrong dimension");
  if (nf > 0 && !model.in_L(1.0, price)) throw Error(ErrorCode::kInfeasibleStart, "price is not arbitrage free");

  // Q in Q'(p): start from the dual optimizer at (1, p), which charges every atom
  const auto start = solve_dual(model, p, DualFunction(family.limit_utility), 1.0, price);
  rep.measure = slice_analytic_center(model, start.pricing_measure);
  const Vector dq = rep.measure.cwiseQuotient(p.weights());

  std::vector<UtilityFunction> members;
  for (int n = 1; n <= n_max; ++n) members.push_back(family.utility(n));
  const auto ys = log_grid(0.1, 10.0, 41);

  rep.finite_space_ui = true;
  rep.xi_max = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    const Vector z = family.density(n);
    const DualFunction v(members[static_cast<std::size_t>(n - 1)]);
    for (double y : ys)
      for (Eigen::Index i = 0; i < z.size(); ++i)
        rep.xi_max = std::max(rep.xi_max, z(i) * v.positive_part(y * dq(i) / z(i)));
  }
  if (!std::isfinite(rep.xi_max)) rep.finite_space_ui = false;

  // item (3)
  rep.upper_bound = -kInf;
  for (const auto& u : members) rep.upper_bound = std::max(rep.upper_bound, u.supremum());
  rep.bounded_above = std::isfinite(rep.upper_bound);

  std::vector<UtilityFunction> sample;
  for (int n : sampled_indices(n_max)) sample.push_back(members[static_cast<std::size_t>(n - 1)]);
  sample.push_back(family.limit_utility);

  // item (4)
  try {
    rep.growth = power_growth_bound(sample);
    const double a = rep.growth.alpha;
    rep.p_hat = 2.0 / (1.0 - a);
    rep.q_hat_min = rep.p_hat * a / (rep.p_hat * (1.0 - a) - 1.0);
    rep.q_hat = q_hat_factor * rep.q_hat_min;
    rep.gamma = rep.q_hat * rep.p_hat * (1.0 - a) / (rep.q_hat + rep.p_hat * a);
    rep.density_moment = 0.0;
    for (int n = 1; n <= n_max; ++n)
      rep.density_moment = std::max(rep.density_moment, p.expectation(family.density(n).array().pow(rep.p_hat).matrix()));
    rep.inverse_density_moment = p.expectation(dq.array().pow(-rep.q_hat).matrix());
    const bool exponents_ok = rep.gamma > 1.0 && rep.gamma < rep.p_hat;

    const double g = rep.gamma;
    const double first = rep.p_hat * (1.0 - a);
    const double c = rep.growth.dual_c, d = std::max(0.0, rep.growth.dual_d);
    rep.holder_bound_holds = exponents_ok;
    for (int n = 1; n <= n_max && rep.holder_bound_holds; ++n) {
      const Vector z = family.density(n);
      const DualFunction v(members[static_cast<std::size_t>(n - 1)]);
      const double zp = p.expectation(z.array().pow(rep.p_hat).matrix());
      const double zg = p.expectation(z.array().pow(g).matrix());
      for (double y : ys) {
        double lhs = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i)
          lhs += p[i] * std::pow(z(i) * v.positive_part(y * dq(i) / z(i)), g);
        const double rhs = std::pow(2.0, g - 1.0) *
                           (std::pow(c, g) * std::pow(y, -g * a / (1.0 - a)) * std::pow(zp, g / first) *
                                std::pow(rep.inverse_density_moment, 1.0 - g / first) +
                            std::pow(d, g) * zg);
        if (lhs > rhs * (1.0 + 1e-12) + 1e-14) {
          rep.holder_bound_holds = false;
          rep.power_moment_note = "Hölder estimate fails at " + at_n(n);
          break;
        }
      }
    }
    if (!exponents_ok) rep.power_moment_note = "exponents violate 1 < gamma < p_hat";
    rep.power_moment = exponents_ok && rep.holder_bound_holds && std::isfinite(rep.density_moment) &&
                       std::isfinite(rep.inverse_density_moment) && rep.growth.dual_violation <= 1e-9;
    if (rep.power_moment_note.empty() && !rep.power_moment) rep.power_moment_note = "dual power bound violated";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoPowerBound) throw;
    rep.power_moment = false;
    rep.power_moment_note = e.what();
  }

  // item (5)
  for (double x0 : {std::exp(1.0), std::exp(2.0), 10.0, 100.0, 1000.0}) {
    try {
      const auto verdict = uniform_rae(sample, x0);
      if (verdict.uniform) {
        rep.uniform_rae = true;
        rep.rae_delta = verdict.delta;
        rep.rae_x0 = x0;
        break;
      }
      rep.rae_delta = verdict.delta;
      rep.rae_x0 = x0;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotApplicable) throw;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

double convexity_gap(const DualFunction& v, int m, int cells) {
  if (m < 1 || cells < 2) throw Error(ErrorCode::kInvalidSpec, "convexity gap needs m >= 1 and at least two cells");
  const double lo = 1.0 / m, hi = static_cast<double>(m), sep = 1.0 / m;
  auto gap = [&](double a, double b) { return 0.5 * (v.value(a) + v.value(b)) - v.value(0.5 * (a + b)); };
  double best = kInf;
  const auto grid = linear_grid(lo, hi, static_cast<std::size_t>(cells) + 1);
  for (double a : grid)
    for (double b : grid)
      if (b - a >= sep * (1.0 - 1e-12)) best = std::min(best, gap(a, b));
  // the infimum sits on the edge |a - b| = 1/m; sample it directly
  if (hi - sep >= lo) {
    for (double a : linear_grid(lo, hi - sep, static_cast<std::size_t>(cells) + 1)) best = std::min(best, gap(a, a + sep));
  }
  return best;
}

CmDiagnostic cm_diagnostic(const MarketModel& model, const ProbabilityMeasure& p, const PerturbationFamily& family,
                           int m_max, const std::vector<int>& ns, const SolverOptions& opts) {
  CmDiagnostic out;
  out.ns = ns;
  const DualFunction v_lim(family.limit_utility);
  double running = kInf;
  for (int m = 1; m <= m_max; ++m) {
    running = std::min(running, convexity_gap(v_lim, m));
    out.beta.push_back(running);
  }
  const auto dual_inf = solve_dual(model, p, v_lim, family.y, family.r, opts);
  const Vector& g = dual_inf.density;

  out.probability.assign(static_cast<std::size_t>(m_max), std::vector<double>(ns.size(), 0.0));
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const int n = ns[k];
    try {
      const Vector z = family.density(n);
      const ProbabilityMeasure pn = p.reweighted(z);
      const auto dual = solve_dual(model, pn, DualFunction(family.utility(n)), family.y, family.r, opts);
      // g_n / Z_n is the optimizer as a density under P_n; f_n mixes g with itself here
      const Vector a = dual.density;
      const Vector b = g.cwiseQuotient(z);
      for (int m = 1; m <= m_max; ++m) {
        const double lo = 1.0 / m, hi = m;
        double prob = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
          const bool in = a(i) >= lo && a(i) <= hi && b(i) >= lo && b(i) <= hi && std::abs(a(i) - b(i)) > 1.0 / m;
          if (in) prob += pn[i];
        }
        out.probability[static_cast<std::size_t>(m - 1)][k] = prob;
      }
    } catch (const Error& e) {
      throw Error(e.code(), "at " + at_n(n) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double normal_tail(double w) { return 0.5 * std::erfc(w / std::sqrt(2.0)); }

struct Lattice {
  std::vector<double> w;  // terminal value of the driving walk per atom
  Vector prob;
  std::vector<double> tail;  // normal tail at each atom
};

// m steps of size 1/sqrt(m) in log price, martingale up probability
Lattice make_lattice(int m) {
  Lattice lat;
  const double s = 1.0 / std::sqrt(static_cast<double>(m));
  const double up = (1.0 - std::exp(-s)) / (std::exp(s) - std::exp(-s));
  lat.prob.resize(m + 1);
  for (int j = 0; j <= m; ++j) {
    const double logc = std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0);
    lat.prob(j) = std::exp(logc + j * std::log(up) + (m - j) * std::log1p(-up));
    lat.w.push_back((2.0 * j - m) * s);
    lat.tail.push_back(normal_tail(lat.w.back()));
  }
  lat.prob /= lat.prob.sum();
  return lat;
}

struct Spike {
  Vector phi;
  double tv = 0.0;
  bool valid = false;
};

// phi = h on {W >= w} with P(N(0,1) > w) = tail / n, constant elsewhere
Spike make_spike(const Lattice& lat, double n, const CounterexampleConfig& cfg) {
  Spike sp;
  const auto size = lat.prob.size();
  sp.phi = Vector::Ones(size);
  if (cfg.flat) {
    sp.valid = true;
    return sp;
  }
  const double pi = cfg.spike_tail / n;
  if (pi >= 1.0) return sp;
  double mass = 0.0;
  for (Eigen::Index j = 0; j < size; ++j)
    if (lat.tail[static_cast<std::size_t>(j)] <= pi) mass += lat.prob(j);
  if (mass <= 0.0) {
    sp.valid = true;
    return sp;
  }
  const double h = std::sqrt(cfg.spike_mass / pi);
  if (h * mass >= 1.0 || mass >= 1.0) return sp;
  const double c = (1.0 - h * mass) / (1.0 - mass);
  for (Eigen::Index j = 0; j < size; ++j) sp.phi(j) = lat.tail[static_cast<std::size_t>(j)] <= pi ? h : c;
  sp.tv = 0.5 * lat.prob.dot((sp.phi.array() - 1.0).abs().matrix());
  sp.valid = true;
  return sp;
}

// Smallest n with 0 < TV < 1/m. Along n the spike covers the top k atoms on
// an interval of n over which TV grows, so the left end of each interval is
// the only candidate.
long long diagonal_index(const Lattice& lat, int m, const CounterexampleConfig& cfg) {
  if (cfg.flat) return 1;
  const double cap = cfg.n_search_cap;
  long long best = -1;
  const auto atoms = static_cast<int>(lat.w.size());
  for (int k = 1; k < atoms; ++k) {
    const int in = atoms - k, out = atoms - k - 1;  // lowest atom inside, highest outside
    const double lo_d = cfg.spike_tail / lat.tail[static_cast<std::size_t>(out)];
    const double hi_d = cfg.spike_tail / lat.tail[static_cast<std::size_t>(in)];
    double start = std::max({std::floor(lo_d) + 1.0, std::floor(cfg.spike_tail / cfg.spike_mass) + 1.0,
                             std::floor(cfg.spike_tail) + 1.0, 1.0});
    if (start > std::min(hi_d, cap)) continue;
    const auto n = static_cast<long long>(start);
    const Spike sp = make_spike(lat, static_cast<double>(n), cfg);
    if (sp.valid && sp.tv > 0.0 && sp.tv < 1.0 / m && (best < 0 || n < best)) best = n;
  }
  return best;
}

CounterexampleRow counterexample_row(int m, long long n, const CounterexampleConfig& cfg, const SolverOptions& opts) {
  CounterexampleRow row;
  row.m = m;
  row.n = static_cast<int>(n);
  const Lattice lat = make_lattice(m);
  const ProbabilityMeasure p(lat.prob, 1e-9);
  const MarketModel model(MartingaleMeasurePolytope::singleton(lat.prob), EndowmentBundle::empty(lat.prob.size()));
  const UtilityFunction u = UtilityFunction::power(cfg.alpha).normalized();
  const DualFunction v(u);
  const Vector none(0);
  if (n < 1) {
    row.tv = row.kyfan = row.orlicz = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  const Spike sp = make_spike(lat, static_cast<double>(n), cfg);
  if (!sp.valid) throw Error(ErrorCode::kInvalidSpec, "spike density is not positive at m = " + std::to_string(m) + ", " + at_n(static_cast<int>(n)));
  const auto base = solve_primal(model, p, u, cfg.x, none, opts);
  const auto pert = solve_primal(model, p.reweighted(sp.phi), u, cfg.x, none, opts);
  row.tv = sp.tv;
  row.kyfan = kyfan_distance(pert.wealth, base.wealth, p);
  double orl = 0.0;
  for (Eigen::Index j = 0; j < sp.phi.size(); ++j) orl += lat.prob(j) * sp.phi(j) * v.positive_part(1.0 / sp.phi(j));
  row.orlicz = orl;
  return row;
}

}  // namespace

CounterexampleReport counterexample_experiment(const CounterexampleConfig& config, const SolverOptions& opts) {
  if (config.alpha <= 0.0 || config.alpha >= 1.0)
    throw Error(ErrorCode::kInvalidSpec, "the counterexample needs an unbounded power utility, 0 < alpha < 1");
  if (config.spike_tail <= 0.0 || config.spike_mass <= 0.0 || config.x <= 0.0)
    throw Error(ErrorCode::kInvalidSpec, "spike parameters and wealth must be positive");
  CounterexampleReport rep;
  for (int m : config.levels) {
    if (m < 1) throw Error(ErrorCode::kInvalidSpec, "refinement levels must be positive");
    const long long n = diagonal_index(make_lattice(m), m, config);
    rep.diagonal.push_back(counterexample_row(m, n, config, opts));
  }
  for (int n : config.fixed_ns) rep.fixed.push_back(counterexample_row(config.fixed_level, n, config, opts));
  rep.fixed_converges = !rep.fixed.empty() && rep.fixed.back().kyfan < 1e-3;
  if (!rep.diagonal.empty()) {
    const auto& last = rep.diagonal.back();
    rep.diagonal_unstable = last.n > 0 && last.kyfan > config.threshold && last.tv < 0.01;
  }
  return rep;
}

}  // namespace ustab
