#include <cmath>

#include "doctest.h"
#include "ustab/error.hpp"
#include "ustab/utility.hpp"

using namespace ustab;

namespace {

std::vector<UtilityFunction> samples() {
  std::vector<double> grid, marg;
  for (int i = 0; i <= 40; ++i) {
    const double x = std::exp(-4.0 + 0.2 * i);
    grid.push_back(x);
    marg.push_back(1.0 / std::sqrt(x) + 0.3 / x);
  }
  return {UtilityFunction::log(),
          UtilityFunction::power(0.5).normalized(),
          UtilityFunction::power(-1.0).normalized(),
          UtilityFunction::power(0.3).affine(2.0, -1.0),
          UtilityFunction::tabulated(grid, marg, -3.0)};
}

}  // namespace

TEST_CASE("closed-form conjugates agree with the numeric supremum") {
  for (const auto& u : samples()) {
    const DualFunction v = conjugate(u);
    for (double y : {0.05, 0.3, 1.0, 2.5, 17.0}) {
      INFO(u.describe() << " y=" << y);
      CHECK(v.value(y) == doctest::Approx(conjugate_numeric(u, y)).epsilon(1e-9));
    }
  }
}

TEST_CASE("inverse marginal round-trips and dual derivatives") {
  for (const auto& u : samples()) {
    const DualFunction v(u);
    for (double x : {0.01, 0.2, 1.1, 3.7, 80.0}) {
      INFO(u.describe() << " x=" << x);
      CHECK(u.inverse_marginal(u.derivative(x)) == doctest::Approx(x).epsilon(1e-12));
      const double y = u.derivative(x);
      const double h = 1e-5 * y;
      CHECK(v.derivative(y) == doctest::Approx((v.value(y + h) - v.value(y - h)) / (2 * h)).epsilon(1e-6));
      CHECK(v.second_derivative(y) ==
            doctest::Approx((v.derivative(y + h) - v.derivative(y - h)) / (2 * h)).epsilon(1e-5));
    }
  }
}

TEST_CASE("normalization fixes value and slope at one") {
  for (const auto& u : samples()) {
    const auto n = u.normalized();
    CHECK(n.value(1.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(n.derivative(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  const DualFunction v(UtilityFunction::power(0.5).normalized());
  // V(y) = y^{-1} - 2 for the normalized square root
  CHECK(v.value(0.5) == doctest::Approx(0.0));
  CHECK(v.value(2.0) == doctest::Approx(-1.5));
  CHECK(DualFunction(UtilityFunction::log()).value(1.0) == doctest::Approx(-1.0));
}

TEST_CASE("bounded-above utilities report their supremum") {
  const auto u = UtilityFunction::power(-1.0).normalized();
  CHECK(u.supremum() == doctest::Approx(1.0));
  CHECK(DualFunction(u).value(1e-12) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::isinf(UtilityFunction::log().supremum()));
}

TEST_CASE("numeric conjugate flags a maximizer beyond the bracket") {
  CHECK_THROWS_AS(conjugate_numeric(UtilityFunction::log(), 1e-14), Error);
  CHECK_THROWS_AS(UtilityFunction::power(1.0), Error);
  CHECK_THROWS_AS(UtilityFunction::tabulated({1.0, 2.0}, {1.0, 1.5}), Error);
}
