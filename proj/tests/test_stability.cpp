#include <chrono>
#include <cmath>
#include <random>

#include "doctest.h"
#include "ustab/error.hpp"
#include "ustab/stability.hpp"

using namespace ustab;

namespace {

struct Case {
  MarketModel model;
  ProbabilityMeasure p;
};

Case trinomial_call() {
  Matrix s(3, 1);
  s << 0.5, 1.0, 2.0;
  const auto market = FiniteMarket::one_period(Vector::Constant(1, 1.0), s, Vector::Constant(3, 1.0 / 3));
  return {MarketModel(martingale_measures(market), EndowmentBundle::from_spec(3, {{0.0, 0.0, 1.0}})), market.reference()};
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

DriftFamilySpec trinomial_drift() {
  DriftFamilySpec s;
  s.zeta = vec({0.03, 0.0, -0.03});
  s.alpha = 0.5;
  s.alpha_start = 0.48;
  s.x = 1.0;
  s.dx = 0.01;
  s.q = vec({0.5});
  s.dq = vec({0.01});
  s.y = 1.0;
  s.dy = 0.02;
  s.r = vec({0.2});
  s.dr = vec({0.005});
  return s;
}

}  // namespace

TEST_CASE("Ky-Fan distance examples and metric axioms") {
  const ProbabilityMeasure half(vec({0.5, 0.5}));
  CHECK(kyfan_distance(vec({1.0, 2.0}), vec({1.0, 2.0}), half) == 0.0);
  CHECK(kyfan_distance(vec({3.0, 4.0}), vec({1.0, 2.0}), half) == doctest::Approx(1.0));
  CHECK(kyfan_distance(vec({0.5, 0.0}), vec({0.0, 0.0}), half) == doctest::Approx(0.25));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  const ProbabilityMeasure p(vec({0.1, 0.2, 0.3, 0.4}));
  auto draw = [&] {
    Vector v(4);
    for (int i = 0; i < 4; ++i) v(i) = unif(rng);
    return v;
  };
  for (int t = 0; t < 200; ++t) {
    const Vector a = draw(), b = draw(), c = draw();
    CHECK(kyfan_distance(a, b, p) == doctest::Approx(kyfan_distance(b, a, p)));
    CHECK(kyfan_distance(a, c, p) <= kyfan_distance(a, b, p) + kyfan_distance(b, c, p) + 1e-15);
  }
}

TEST_CASE("one-sided Hausdorff distance") {
  const std::vector<Vector> interval = {vec({0.2}), vec({0.35})};
  CHECK(one_sided_hausdorff(interval, interval) == doctest::Approx(0.0).epsilon(1e-14));
  for (int n : {1, 2, 10, 100}) {
    CHECK(one_sided_hausdorff({vec({0.1 + 1.0 / n})}, {vec({0.1})}) == doctest::Approx(1.0 / n));
    const double drift = one_sided_hausdorff({vec({0.3 + 0.1 / n})}, interval);
    CHECK(drift == doctest::Approx(std::max(0.0, 0.3 + 0.1 / n - 0.35)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(one_sided_hausdorff({}, interval), Error);

  const auto idx = first_index_below({1, 2, 3, 4}, {0.5, 0.05, 0.2, 0.001}, {1e-1, 1e-2});
  CHECK(idx[0].second == 4);
  CHECK(idx[1].second == 4);
  const auto none = first_index_below({1, 2}, {0.5, 0.5}, {1e-1});
  CHECK(none[0].second == -1);
}

TEST_CASE("constant family has zero deviations") {
  const auto c = trinomial_call();
  DriftFamilySpec s;
  s.zeta = Vector::Zero(3);
  s.q = vec({0.5});
  s.r = vec({0.2});
  const auto fam = drift_family(s);
  validate_family(c.model, c.p, fam, 20);
  const auto rep = run_stability_experiment(c.model, c.p, fam, 20);
  CHECK(rep.pass());
  for (const auto& r : rep.records) {
    CHECK(std::abs(r.u - rep.u_inf) < 1e-10);
    CHECK(std::abs(r.v - rep.v_inf) < 1e-10);
    CHECK(r.kyfan_x < 1e-9);
    CHECK(r.kyfan_y < 1e-9);
    CHECK(r.hausdorff < 1e-9);
    CHECK(r.tv == 0.0);
  }
}

TEST_CASE("trinomial drift family converges at n = 1000") {
  const auto c = trinomial_call();
  const auto fam = drift_family(trinomial_drift());
  validate_family(c.model, c.p, fam, 1000);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_stability_experiment(c.model, c.p, fam, 1000);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("stability run took " << secs << " s; dev_u " << rep.dev_u << " dev_v " << rep.dev_v << " dev_ux "
                                << rep.dev_du_dx << " dev_vy " << rep.dev_dv_dy << " kyfan " << rep.final_kyfan_x
                                << " " << rep.final_kyfan_y);
  CHECK(rep.values_pass);
  CHECK(rep.kyfan_pass);
  CHECK(rep.hausdorff_pass);
  CHECK(rep.lower_semicontinuity_pass);
  CHECK(rep.upper_semicontinuity_pass);
  REQUIRE(rep.hausdorff_n0.size() == 3);
  for (const auto& [eps, n0] : rep.hausdorff_n0) {
    CHECK(n0 >= 1);
    CHECK(n0 <= 1000);
  }
  // deviations shrink along the family
  CHECK(std::abs(rep.records[9].u - rep.u_inf) > rep.dev_u);
  CHECK(rep.records.back().tv < rep.records.front().tv);
}

TEST_CASE("family validation rejects bad densities and points") {
  const auto c = trinomial_call();
  auto s = trinomial_drift();
  s.zeta = vec({-1.5, 0.0, 1.5});
  CHECK_THROWS_WITH_AS(validate_family(c.model, c.p, drift_family(s), 10), doctest::Contains("NonPositiveProbability"), Error);
  s = trinomial_drift();
  s.zeta = vec({0.1, 0.1, 0.1});
  CHECK_THROWS_AS(validate_family(c.model, c.p, drift_family(s), 10), Error);
  s = trinomial_drift();
  s.r = vec({0.5});
  CHECK_THROWS_WITH_AS(validate_family(c.model, c.p, drift_family(s), 10), doctest::Contains("InfeasibleStart"), Error);
}

TEST_CASE("solver failures are reported with the offending index") {
  const auto c = trinomial_call();
  auto fam = drift_family(trinomial_drift());
  fam.primal_point = [](int n) { return std::make_pair(n == 3 ? -1.0 : 1.0, vec({0.0})); };
  CHECK_THROWS_WITH(run_stability_experiment(c.model, c.p, fam, 5), doctest::Contains("n = 3"));
}

TEST_CASE("uniform integrability diagnostics") {
  const auto c = trinomial_call();
  const Vector price = vec({0.2});

  SUBCASE("capped power is bounded above") {
    auto s = trinomial_drift();
    s.alpha = -1.0;
    s.alpha_start = -0.5;
    const auto rep = ui_condition_report(c.model, c.p, drift_family(s), price, 50);
    CHECK(rep.finite_space_ui);
    CHECK(rep.bounded_above);
    CHECK(std::isfinite(rep.upper_bound));
    // Q prices the claim at p and charges every atom
    CHECK(std::abs(rep.measure(2) - 0.2) < 1e-9);
    CHECK(rep.measure.minCoeff() > 0.0);
  }
  SUBCASE("power family with bounded densities satisfies the moment condition") {
    const auto rep = ui_condition_report(c.model, c.p, drift_family(trinomial_drift()), price, 50);
    CHECK_FALSE(rep.bounded_above);
    CHECK(rep.power_moment);
    CHECK(rep.growth.alpha == doctest::Approx(0.5));
    CHECK(rep.p_hat == doctest::Approx(4.0));
    CHECK(rep.q_hat_min == doctest::Approx(2.0));
    CHECK(rep.gamma > 1.0);
    CHECK(rep.gamma < rep.p_hat);
    CHECK(rep.holder_bound_holds);
    // the exponent identity behind the Hölder step
    const double s = 1.0 + rep.p_hat * rep.growth.alpha / rep.q_hat;
    CHECK(rep.gamma * s == doctest::Approx(rep.p_hat * (1.0 - rep.growth.alpha)));
  }
  SUBCASE("the unscaled conjugate exponent leaves gamma at one") {
    const auto rep = ui_condition_report(c.model, c.p, drift_family(trinomial_drift()), price, 10, 1.0);
    CHECK(rep.gamma == doctest::Approx(1.0));
    CHECK_FALSE(rep.power_moment);
  }
  SUBCASE("log family has uniform reasonable asymptotic elasticity") {
    auto s = trinomial_drift();
    s.log_utility = true;
    const auto rep = ui_condition_report(c.model, c.p, drift_family(s), price, 20);
    CHECK(rep.uniform_rae);
    CHECK(rep.rae_delta < 1.0);
    CHECK(rep.rae_x0 > 0.0);
  }
}

TEST_CASE("strict convexity gap on C_m") {
  const DualFunction v(UtilityFunction::log());
  CHECK(std::isinf(convexity_gap(v, 1)));
  double prev = std::numeric_limits<double>::infinity();
  for (int m = 2; m <= 10; ++m) {
    const double beta = convexity_gap(v, m);
    // V(y) = -log y - 1: the gap is smallest on the edge a = m - 1/m, b = m
    const double a = m - 1.0 / m, b = m;
    const double exact = -0.5 * (std::log(a) + std::log(b)) + std::log(0.5 * (a + b));
    CHECK(beta > 0.0);
    CHECK(beta == doctest::Approx(exact).epsilon(1e-6));
    CHECK(beta <= prev);
    prev = beta;
  }
}

TEST_CASE("C_m probability curves") {
  const auto c = trinomial_call();
  const std::vector<int> ns = {1, 10, 100, 1000};
  DriftFamilySpec flat;
  flat.zeta = Vector::Zero(3);
  flat.q = vec({0.5});
  flat.r = vec({0.2});
  const auto zero = cm_diagnostic(c.model, c.p, drift_family(flat), 5, ns);
  for (const auto& row : zero.probability)
    for (double pr : row) CHECK(pr == 0.0);

  auto s = trinomial_drift();
  s.zeta = vec({0.9, 0.0, -0.9});
  s.alpha_start = 0.2;
  const auto cm = cm_diagnostic(c.model, c.p, drift_family(s), 5, ns);
  REQUIRE(cm.beta.size() == 5);
  for (double b : cm.beta) CHECK(b > 0.0);
  for (const auto& row : cm.probability) CHECK(row.back() == 0.0);
}

TEST_CASE("counterexample: fixed level converges, diagonal does not") {
  CounterexampleConfig cfg;
  const auto rep = counterexample_experiment(cfg);
  REQUIRE(rep.fixed.size() == cfg.fixed_ns.size());
  REQUIRE(rep.diagonal.size() == cfg.levels.size());
  CHECK(rep.fixed_converges);
  CHECK(rep.fixed.back().kyfan < 1e-3);
  CHECK(rep.diagonal_unstable);
  for (const auto& row : rep.diagonal) {
    CHECK(row.n >= 1);
    CHECK(row.tv > 0.0);
    CHECK(row.tv < 1.0 / row.m);
  }
  CHECK(rep.diagonal.back().kyfan > 0.05);

  cfg.flat = true;
  const auto flat = counterexample_experiment(cfg);
  for (const auto& row : flat.fixed) CHECK(row.kyfan < 1e-9);
  for (const auto& row : flat.diagonal) CHECK(row.kyfan < 1e-9);
  CHECK_FALSE(flat.diagonal_unstable);
}
