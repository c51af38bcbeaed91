#include <cmath>
#include <random>

#include "doctest.h"
#include "ustab/convex.hpp"
#include "ustab/error.hpp"

using namespace ustab;

namespace {

DualFunction log_dual() { return DualFunction(UtilityFunction::log()); }

// normalized power conjugate in closed form, written out independently
double power_dual(double alpha, double y) {
  return ((1.0 - alpha) / alpha) * std::pow(y, -alpha / (1.0 - alpha)) - 1.0 / alpha;
}

}  // namespace

TEST_CASE("epsilon extension") {
  const EpsilonExtension ve(log_dual(), 0.5);
  CHECK(ve.value(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(ve.value(0.7) == log_dual().value(0.7));
  CHECK(ve.derivative(0.2) == doctest::Approx(-2.0));
  const EpsilonExtension coarse(log_dual(), 0.5), fine(log_dual(), 0.1);
  for (double y : {0.01, 0.05, 0.2, 0.45}) CHECK(coarse.value(y) <= fine.value(y));
  const auto grid = log_grid(0.01, 10.0, 200);
  CHECK_NOTHROW(ve.sample(grid));
}

TEST_CASE("grid functions check their declared shape") {
  CHECK_THROWS_AS(GridFunction({1.0, 2.0, 3.0}, {0.0, 1.0, 1.5}, Shape::kConvex), Error);
  CHECK_NOTHROW(GridFunction({1.0, 2.0, 3.0}, {0.0, 1.0, 1.5}, Shape::kConcave));
  const GridFunction g({1.0, 2.0, 4.0}, {1.0, 3.0, 7.0});
  CHECK(g(3.0) == doctest::Approx(5.0));
  CHECK(g(5.0) == doctest::Approx(9.0));
}

TEST_CASE("convex minorant") {
  const auto grid = log_grid(0.05, 20.0, 400);
  const auto v = log_dual();
  const auto single = convex_minorant(std::vector<DualFunction>{v}, grid);
  const auto twice = convex_minorant(std::vector<DualFunction>{v, v}, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(single.ys()[i] == doctest::Approx(v.value(grid[i])).epsilon(1e-14));
    CHECK(twice.ys()[i] == single.ys()[i]);
    CHECK(single.ys()[i] >= -grid[i]);
  }

  // tails of alpha_k = 0.5 - 0.2 / k increase to 0.5
  const double alpha = 0.5;
  const auto cgrid = log_grid(0.5, 2.0, 300);
  double prev = 1e9;
  for (int n : {1, 10, 100, 1000, 10000}) {
    std::vector<ScalarFunction> tail;
    for (int k = n; k < n + 50; ++k) {
      const double a = alpha - 0.2 / k;
      tail.emplace_back([a](double y) { return power_dual(a, y); });
    }
    const auto m = convex_minorant(tail, cgrid);
    double dist = 0.0;
    for (std::size_t i = 0; i < cgrid.size(); ++i) {
      CHECK(m.ys()[i] <= power_dual(alpha, cgrid[i]) + 1e-12);
      dist = std::max(dist, std::abs(m.ys()[i] - power_dual(alpha, cgrid[i])));
    }
    CHECK(dist <= prev);
    prev = dist;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("average function") {
  auto grid = log_grid(0.05, 1.0, 200);
  const auto upper = log_grid(1.0, 1000.0, 600);
  grid.insert(grid.end(), upper.begin() + 1, upper.end());
  const auto minorant = convex_minorant(std::vector<DualFunction>{log_dual()}, grid);
  const auto avg = average_function(minorant);
  const auto d = average_diagnostics(avg);
  CHECK(d.value_at_one == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(d.increasing_on_tail);
  CHECK(d.tail_value < 0.0);
  CHECK(d.tail_value > -0.01);
  CHECK(avg(std::exp(1.0)) == doctest::Approx(-2.0 / std::exp(1.0)).epsilon(1e-4));
}

TEST_CASE("perspective is jointly convex and positively homogeneous") {
  const EpsilonExtension ve(log_dual(), 0.25);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.01, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double z1 = d(rng), y1 = d(rng), z2 = d(rng), y2 = d(rng);
    const double mid = perspective(ve, 0.5 * (z1 + z2), 0.5 * (y1 + y2));
    const double avg = 0.5 * (perspective(ve, z1, y1) + perspective(ve, z2, y2));
    worst = std::min(worst, avg - mid);
  }
  CHECK(worst >= -1e-12);
  CHECK(perspective(ve, 1.0, 0.7) == ve.value(0.7));
  CHECK(perspective(ve, 3.0, 1.2) == doctest::Approx(3.0 * perspective(ve, 1.0, 0.4)));
}

TEST_CASE("epi-convergence checker") {
  const auto v = log_dual();
  const ScalarFunction f = [&](double y) { return v.value(y); };
  const std::vector<double> probes = {0.2, 0.5, 1.0, 2.0, 5.0};
  const auto same = check_epi_convergence([&](int, double y) { return f(y); }, 200, f, probes, 1e-2);
  CHECK(same.converges);
  CHECK(same.worst_gap == 0.0);
  const auto shifted = check_epi_convergence([&](int n, double y) { return f(y) + 1.0 / n; }, 200, f, probes, 1e-2);
  CHECK(shifted.converges);
  CHECK(shifted.recovery_gap == doctest::Approx(1.0 / 200));
  const auto off = check_epi_convergence([&](int, double y) { return f(y) - 0.5; }, 200, f, probes, 1e-2);
  CHECK_FALSE(off.converges);
}

TEST_CASE("epi-convergence commutes with conjugation on a power family") {
  // f_n = V_n convex on (0, inf); its conjugate at s = -x is -U_n(x).
  const double alpha = 0.5;
  auto alpha_n = [&](int n) { return alpha - 0.3 / n; };
  auto u_n = [&](int n) { return UtilityFunction::power(alpha_n(n)).normalized(); };
  const auto u = UtilityFunction::power(alpha).normalized();
  const std::vector<double> probes = {0.3, 1.0, 3.0};

  for (double bias : {0.0, 0.5}) {
    const auto primal = check_epi_convergence(
        [&](int n, double y) { return DualFunction(u_n(n)).value(y) + bias; }, 1000,
        [&](double y) { return DualFunction(u).value(y); }, probes, 1e-2);
    INFO("bias " << bias << " primal gap " << primal.worst_gap);
    // conjugates computed numerically from the sampled convex functions
    const auto conj = check_epi_convergence(
        [&](int n, double x) {
          const DualFunction vn(u_n(n));
          return legendre_numeric([&](double y) { return vn.value(y) + bias; }, -x);
        },
        1000,
        [&](double x) {
          const DualFunction v(u);
          return legendre_numeric([&](double y) { return v.value(y); }, -x);
        },
        probes, 1e-2);
    INFO("conjugate gap " << conj.worst_gap);
    CHECK(primal.converges == conj.converges);
    CHECK(primal.converges == (bias == 0.0));
  }
}

TEST_CASE("subdifferentials") {
  const auto v = log_dual();
  const auto s = subdifferential([&](double y) { return v.value(y); }, 1.0);
  CHECK(s.lo == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(s.hi == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(s.degenerate());

  const GridFunction kink({-1.0, 0.0, 1.0, 2.0, 3.0}, {2.0, 1.0, 0.0, 1.0, 2.0}, Shape::kConvex);
  const auto k = subdifferential([&](double x) { return kink(x); }, 1.0, -1.0, 3.0);
  CHECK(k.lo == doctest::Approx(-1.0));
  CHECK(k.hi == doctest::Approx(1.0));
  CHECK_FALSE(k.degenerate());

  const EpsilonExtension ve(v, 0.5);
  const auto e = subdifferential([&](double y) { return ve.value(y); }, 0.5);
  CHECK(e.degenerate());
  CHECK(e.lo == doctest::Approx(v.derivative(0.5)).epsilon(1e-7));
  CHECK_THROWS_AS(subdifferential([&](double y) { return v.value(y); }, 5e-4), Error);
}

TEST_CASE("graphical convergence checker") {
  const auto v = log_dual();
  const Interval limit{-1.0, -1.0};
  const auto same = check_graphical_convergence([&](int) { return Interval{-1.0, -1.0}; }, limit, 100);
  CHECK(same.inclusion_holds);
  CHECK_FALSE(same.unbounded);
  for (const auto& [eps, n] : same.n_of_eps) CHECK(n == 1);

  // power family alpha_n -> alpha at x_n = 1 + 1/n -> 1 (closed-form derivatives)
  const double alpha = 0.5;
  auto d = [&](int n) {
    const double a = alpha - 0.3 / n, x = 1.0 + 1.0 / n;
    const double g = std::pow(x, a - 1.0);
    return Interval{g, g};
  };
  const auto pw = check_graphical_convergence(d, Interval{1.0, 1.0}, 1000, 1e-3);
  CHECK(pw.inclusion_holds);
  CHECK(pw.final_distance < 1e-3);
  REQUIRE(pw.n_of_eps.size() == 3);
  CHECK(pw.n_of_eps[0].second > 0);

  // |x - 1/n| at x_n = 1/n against |x| at 0: d f_n(x_n) = [-1, 1] = d f(0)
  auto kink = [](int n) {
    const double c = 1.0 / n;
    return subdifferential([c](double x) { return std::abs(x - c); }, c, -10.0, 10.0);
  };
  const auto kg = check_graphical_convergence(kink, Interval{-1.0, 1.0}, 50);
  CHECK(kg.inclusion_holds);
  const auto bad = check_graphical_convergence(kink, Interval{0.0, 0.5}, 50);
  CHECK_FALSE(bad.inclusion_holds);
  const auto unb = check_graphical_convergence(
      [](int n) { return Interval{-1.0 * n * 1e7, 0.0}; }, Interval{-1.0, 0.0}, 50);
  CHECK(unb.unbounded);
  CHECK(unb.n_of_eps.empty());
}

TEST_CASE("asymptotic elasticity and uniform RAE") {
  CHECK(asymptotic_elasticity(UtilityFunction::power(0.3), 1.0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(asymptotic_elasticity(UtilityFunction::log(), std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  const auto rae = uniform_rae({UtilityFunction::log()}, std::exp(2.0));
  CHECK(rae.uniform);
  CHECK(rae.delta == doctest::Approx(0.5).epsilon(1e-12));
  std::vector<UtilityFunction> fam;
  for (int n = 1; n <= 20; ++n) fam.push_back(UtilityFunction::power(0.6 - 0.2 / n));
  CHECK(uniform_rae(fam, 1.0).delta == doctest::Approx(0.59).epsilon(1e-12));
  CHECK_THROWS_AS(asymptotic_elasticity(UtilityFunction::log(), 0.5), Error);
}

TEST_CASE("power growth bounds") {
  const auto sq = power_growth_bound({UtilityFunction::power(0.5).normalized()});
  CHECK(sq.alpha == doctest::Approx(0.5));
  CHECK(sq.c == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(sq.d == doctest::Approx(-2.0).epsilon(1e-8));
  CHECK(sq.dual_violation <= 1e-9);

  const auto lg = power_growth_bound({UtilityFunction::log()});
  CHECK(lg.alpha == doctest::Approx(0.01));
  CHECK(lg.dual_violation <= 1e-9);
  for (double x : log_grid(1e-6, 1e6, 300)) CHECK(std::log(x) <= lg.c * std::pow(x, lg.alpha) + lg.d + 1e-9);
}
