#include <algorithm>

#include "doctest.h"
#include "ustab/error.hpp"
#include "ustab/market.hpp"

using namespace ustab;

namespace {

FiniteMarket binomial() {
  Matrix s1(2, 1);
  s1 << 2.0, 0.5;
  return FiniteMarket::one_period(Vector::Constant(1, 1.0), s1, Vector::Constant(2, 0.5));
}

FiniteMarket trinomial() {
  Matrix s1(3, 1);
  s1 << 0.5, 1.0, 2.0;
  return FiniteMarket::one_period(Vector::Constant(1, 1.0), s1, Vector::Constant(3, 1.0 / 3.0));
}

EndowmentBundle call_at_one(std::size_t atoms, const Vector& payoff) {
  Matrix f(static_cast<Eigen::Index>(atoms), 1);
  f.col(0) = payoff;
  return {atoms, f};
}

// Global basis enumeration on the full H-representation, independent of the
// node-by-node product construction.
std::vector<Vector> global_vertices(const FiniteMarket& m) {
  const Matrix a = m.martingale_constraints();
  Matrix eq(a.rows() + 1, a.cols());
  eq.topRows(a.rows()) = a;
  eq.row(a.rows()).setOnes();
  Vector b = Vector::Zero(eq.rows());
  b(eq.rows() - 1) = 1.0;
  return enumerate_vertices(eq, b);
}

bool same_set(const std::vector<Vector>& a, const std::vector<Vector>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (const auto& v : a)
    if (std::none_of(b.begin(), b.end(), [&](const Vector& w) { return (v - w).cwiseAbs().maxCoeff() <= tol; }))
      return false;
  return true;
}

}  // namespace

TEST_CASE("binomial market has the single measure (1/3, 2/3)") {
  const auto poly = martingale_measures(binomial());
  REQUIRE(poly.num_vertices() == 1);
  CHECK(poly.vertices()[0](0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(poly.vertices()[0](1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const auto report = check_nflvr(binomial());
  CHECK(report.holds);
  REQUIRE(report.measure);
  CHECK((*report.measure - poly.vertices()[0]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trinomial vertices, call price interval and cone membership") {
  const auto poly = martingale_measures(trinomial());
  std::vector<Vector> expected(2, Vector(3));
  expected[0] << 2.0 / 3.0, 0.0, 1.0 / 3.0;
  expected[1] << 0.0, 1.0, 0.0;
  CHECK(same_set(poly.vertices(), expected, 1e-12));
  CHECK(poly.constraint_violation(poly.analytic_center()) < 1e-12);
  CHECK(poly.analytic_center().minCoeff() > 0.0);

  const auto f = call_at_one(3, Vector::Unit(3, 2));
  const auto prices = arbitrage_free_price_set(poly, f);
  CHECK(prices.is_open());
  CHECK(prices.closure_contains(Vector::Constant(1, 0.0)));
  CHECK(prices.closure_contains(Vector::Constant(1, 1.0 / 3.0)));
  CHECK_FALSE(prices.closure_contains(Vector::Constant(1, 0.34)));
  CHECK_FALSE(prices.contains(Vector::Constant(1, 1.0 / 3.0)));
  CHECK(prices.contains(Vector::Constant(1, 0.2)));
  CHECK(check_n_trad(poly, f));
  CHECK(superreplication_cost(poly, Vector::Unit(3, 2)) == doctest::Approx(1.0 / 3.0));

  CHECK_FALSE(membership_K(poly, f, 0.1, Vector::Constant(1, -1.0)));
  CHECK(membership_K(poly, f, 0.5, Vector::Constant(1, -1.0)));
  CHECK(membership_L(poly, f, 1.0, Vector::Constant(1, 0.2)));
  CHECK_FALSE(membership_L(poly, f, 1.0, Vector::Constant(1, 1.0 / 3.0)));
  CHECK_FALSE(membership_L(poly, f, 0.0, Vector::Constant(1, 0.0)));
}

TEST_CASE("product vertices match global basis enumeration on a two-period tree") {
  MarketSpec spec;
  spec.parent = {-1, 0, 0, 0, 1, 1, 1, 2, 2, 3, 3};
  spec.prices = {{1.0, 1.0}, {1.3, 0.9}, {0.9, 1.2}, {0.8, 0.8}, {1.6, 1.0}, {1.1, 0.6},
                 {1.2, 1.1}, {0.7, 1.5}, {1.1, 0.9}, {0.6, 0.7}, {1.0, 0.9}};
  spec.atoms = {0.15, 0.15, 0.1, 0.2, 0.1, 0.15, 0.15};
  const auto market = FiniteMarket::build(spec);
  const auto poly = MartingaleMeasurePolytope::from_market(market);
  const auto oracle = global_vertices(market);
  CHECK(poly.num_vertices() > 0);
  CHECK(same_set(poly.vertices(), oracle, 1e-9));
  for (const auto& v : poly.vertices()) CHECK(poly.constraint_violation(v) < 1e-12);
}

TEST_CASE("trinomial two-period product matches the global enumeration") {
  MarketSpec spec;
  spec.parent = {-1, 0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3};
  spec.prices = {{1.0}, {1.2}, {1.0}, {0.8}, {1.5}, {1.2}, {1.0}, {1.2}, {1.0}, {0.9}, {1.0}, {0.8}, {0.6}};
  spec.atoms.assign(9, 1.0 / 9.0);
  const auto market = FiniteMarket::build(spec);
  const auto poly = martingale_measures(market);
  CHECK(same_set(poly.vertices(), global_vertices(market), 1e-9));
  CHECK(poly.num_vertices() == 6);
}

TEST_CASE("arbitrage markets are rejected with a certificate") {
  Matrix s1(2, 1);
  s1 << 1.5, 2.0;
  const auto m = FiniteMarket::one_period(Vector::Constant(1, 1.0), s1, Vector::Constant(2, 0.5));
  CHECK_THROWS_AS(martingale_measures(m), Error);
  try {
    martingale_measures(m);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoMartingaleMeasure);
  }
  const auto report = check_nflvr(m);
  CHECK_FALSE(report.holds);
  REQUIRE(report.arbitrage);
  CHECK(report.arbitrage->terminal_gain.minCoeff() >= 0.0);
  CHECK(report.arbitrage->terminal_gain.maxCoeff() > 0.0);

  // boundary case: the only martingale measure is not equivalent
  s1 << 1.0, 2.0;
  const auto edge = FiniteMarket::one_period(Vector::Constant(1, 1.0), s1, Vector::Constant(2, 0.5));
  const auto r2 = check_nflvr(edge);
  CHECK_FALSE(r2.holds);
  REQUIRE(r2.arbitrage);
  CHECK(r2.arbitrage->terminal_gain.minCoeff() >= 0.0);
  CHECK(r2.arbitrage->terminal_gain.maxCoeff() > 0.0);
}

TEST_CASE("malformed trees are rejected with specific codes") {
  auto code_of = [](const MarketSpec& s) {
    try {
      FiniteMarket::build(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  MarketSpec s;
  s.parent = {-1, 0, 0};
  s.prices = {{1.0}, {2.0}, {0.5}};
  s.atoms = {0.5, 0.5};
  CHECK_NOTHROW(FiniteMarket::build(s));

  auto bad = s;
  bad.atoms = {1.0, 0.0};
  CHECK(code_of(bad) == ErrorCode::kNonPositiveProbability);
  bad = s;
  bad.parent = {-1, 2, 0};
  CHECK(code_of(bad) == ErrorCode::kDisconnectedTree);
  bad = s;
  bad.parent = {-1, 0, 1};
  CHECK(code_of(bad) == ErrorCode::kDegenerateBranching);
  bad = s;
  bad.atoms = {0.5, 0.5, 0.1};
  CHECK(code_of(bad) == ErrorCode::kInvalidSpec);
}

TEST_CASE("probability measures and total variation") {
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  const ProbabilityMeasure p(w);
  Vector z(3);
  z << 1.5, 1.0, 0.8;
  const auto q = p.reweighted(z);
  CHECK(total_variation(p, q) == doctest::Approx(0.1));
  CHECK_THROWS_AS(ProbabilityMeasure(Vector::Constant(2, 0.4)), Error);
}
