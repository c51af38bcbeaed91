#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ustab/market.hpp"
#include "ustab/utility.hpp"

namespace ustab {

/// The pricing side of a problem: martingale measures plus the illiquid
/// claims, with vertex prices and the arbitrage-free price set cached.
class MarketModel {
 public:
  MarketModel(MartingaleMeasurePolytope polytope, EndowmentBundle f);

  const MartingaleMeasurePolytope& polytope() const { return polytope_; }
  const EndowmentBundle& endowments() const { return f_; }
  std::size_t num_atoms() const { return polytope_.num_atoms(); }
  std::size_t num_claims() const { return f_.size(); }
  const Matrix& vertex_matrix() const { return vertex_matrix_; }
  /// N x K matrix of vertex prices.
  const Matrix& vertex_prices() const { return vertex_prices_; }
  /// Null when there are no claims.
  const PriceSet* price_set() const { return price_set_ ? &*price_set_ : nullptr; }

  /// x + min_k <q, E^{Q_k} f>.
  double k_margin(double x, const Vector& q) const;
  bool in_K(double x, const Vector& q) const { return k_margin(x, q) > kConeMargin; }
  bool in_L(double y, const Vector& r) const;

  /// The same polytope without claims.
  MarketModel without_claims() const;

 private:
  MartingaleMeasurePolytope polytope_;
  EndowmentBundle f_;
  Matrix vertex_matrix_;
  Matrix vertex_prices_;
  std::optional<PriceSet> price_set_;
};

struct SolverOptions {
  double tol = 1e-10;      // KKT residual target
  int max_iter = 300;
  double armijo = 1e-4;
};

struct PrimalSolution {
  double x = 0.0;
  Vector q;
  Vector wealth;          // optimal terminal wealth X_T per atom
  Vector payoff;          // X_T + <q, f>
  Vector density;         // U'(payoff): the matching dual density under P
  double value = 0.0;     // u(x, q)
  double marginal = 0.0;  // du/dx
  Vector price_gradient;  // du/dq
  Vector multipliers;     // weights on the polytope vertices
  double kkt_residual = 0.0;
  double duality_gap = 0.0;
  bool degenerate = false;  // support reduction was needed
  int iterations = 0;
};

struct DualSolution {
  double y = 0.0;
  Vector r;
  Vector density;          // Y_T per atom, relative to P
  Vector pricing_measure;  // y^{-1} Y_T dP
  std::vector<Vector> vertex_weights;  // extreme decompositions of the pricing measure
  double value = 0.0;      // v(y, r)
  double dv_dy = 0.0;
  Vector dv_dr;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// max E^P U(g) over g >= 0 with E^{Q_k} g <= x + <q, E^{Q_k} f> at every
/// vertex, via a projected Newton method on the vertex multipliers.
PrimalSolution solve_primal(const MarketModel& model, const ProbabilityMeasure& p, const UtilityFunction& u, double x,
                            const Vector& q, const SolverOptions& opts = {});

/// min E^P V(h) over densities h with E^P[h dS-rows] = 0, E^P h = y and
/// E^P[h f] = r, by Newton's method on the affine slice.
DualSolution solve_dual(const MarketModel& model, const ProbabilityMeasure& p, const DualFunction& v, double y,
                        const Vector& r, const SolverOptions& opts = {});

struct Superdifferential {
  double y = 0.0;
  std::vector<Vector> r;  // vertices of R
  double max_slack = 0.0; // v(y, r) + x y + <q, r> - u(x, q) over the vertices
};

/// d u(x, q) = {y} x R: the vertices of R are traced by support probes over
/// the optimal multiplier set, and every vertex is checked against the dual.
Superdifferential superdifferential_u(const MarketModel& model, const ProbabilityMeasure& p, const UtilityFunction& u,
                                      double x, const Vector& q, const SolverOptions& opts = {});

struct MarginalPriceSet {
  std::vector<Vector> prices;
  bool within_closure = false;  // inside the closed arbitrage-free price set
};
MarginalPriceSet marginal_price_set(const Superdifferential& du, const MarketModel& model);

/// max_i |Y_T - U'(payoff)|.
double first_order_link_residual(const PrimalSolution& primal, const DualSolution& dual, const UtilityFunction& u);

/// Residual of the first-order link. Throws MismatchedPair when (dual.y,
/// dual.r) is not a supergradient of u at (primal.x, primal.q).
double first_order_link_check(const MarketModel& model, const ProbabilityMeasure& p, const PrimalSolution& primal,
                              const DualSolution& dual, const UtilityFunction& u);

struct ConjugacyReport {
  double primal_residual = 0.0;  // |u - inf_{L} (v + x y + <q, r>)| over the K grid
  double dual_residual = 0.0;    // |v - sup_{K} (u - x y - <q, r>)| over the L grid
  double max_residual = 0.0;
  double dual_at_zero_claims = 0.0;  // v(1, 0) of the claim-free problem, finite
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
};

using PointList = std::vector<std::pair<double, Vector>>;

/// Both conjugacy identities: each side's optimization uses only its own
/// solver's gradients and is compared with the other solver's value.
ConjugacyReport conjugacy_check(const MarketModel& model, const ProbabilityMeasure& p, const UtilityFunction& u,
                                const PointList& k_points, const PointList& l_points, const SolverOptions& opts = {});

}  // namespace ustab
