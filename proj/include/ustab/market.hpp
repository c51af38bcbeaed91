#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ustab/polyhedra.hpp"

namespace ustab {

/// Raw description of a scenario tree, as read from a configuration document.
/// Node 0 is the root; every other node lists a parent with a smaller index.
/// `prices[node]` holds the d risky-asset prices at that node (the numeraire is
/// implicit and equal to 1). `atoms[k]` is the reference probability of the
/// k-th terminal node, terminal nodes taken in increasing node order.
struct MarketSpec {
  std::vector<int> parent;
  std::vector<std::vector<double>> prices;
  std::vector<double> atoms;
  std::vector<std::vector<double>> endowments;  // N payoff vectors over atoms
};

class ProbabilityMeasure {
 public:
  /// Validates nonnegativity and unit mass (within `tol`).
  explicit ProbabilityMeasure(Vector weights, double tol = 1e-12);

  const Vector& weights() const { return weights_; }
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  double operator[](Eigen::Index i) const { return weights_(i); }
  bool equivalent() const { return weights_.size() > 0 && weights_.minCoeff() > 0.0; }

  double expectation(const Vector& x) const { return weights_.dot(x); }
  /// Measure with density `z` relative to this one; `z` must integrate to one.
  ProbabilityMeasure reweighted(const Vector& z) const;

 private:
  Vector weights_;
};

/// (1/2) sum_i |a_i - b_i|.
double total_variation(const ProbabilityMeasure& a, const ProbabilityMeasure& b);

class FiniteMarket {
 public:
  /// Validates the tree and the atom weights. Throws NonPositiveProbability,
  /// DisconnectedTree, DegenerateBranching or InvalidSpec.
  static FiniteMarket build(const MarketSpec& spec);

  /// One trading period: root price `s0`, terminal prices `s1` (one row per
  /// state, one column per asset) and state probabilities.
  static FiniteMarket one_period(const Vector& s0, const Matrix& s1, const Vector& probabilities);

  std::size_t num_nodes() const { return parent_.size(); }
  std::size_t num_assets() const { return num_assets_; }
  std::size_t num_atoms() const { return atom_node_.size(); }
  int horizon() const { return horizon_; }

  int parent(std::size_t node) const { return parent_[node]; }
  const std::vector<std::size_t>& children(std::size_t node) const { return children_[node]; }
  bool is_terminal(std::size_t node) const { return children_[node].empty(); }
  const Vector& price(std::size_t node) const { return prices_[node]; }
  int depth(std::size_t node) const { return depth_[node]; }
  std::size_t atom_node(std::size_t atom) const { return atom_node_[atom]; }
  /// The node at `depth` on the path from the root to `atom`.
  std::size_t ancestor(std::size_t atom, int depth) const { return paths_[atom][static_cast<std::size_t>(depth)]; }
  /// True iff `atom` lies in the subtree of `node`.
  bool in_subtree(std::size_t atom, std::size_t node) const;

  const ProbabilityMeasure& reference() const { return reference_; }

  /// One row per (non-terminal node, asset): sum_w Q_w (S(child on path) - S(node)) = 0.
  Matrix martingale_constraints() const;

  /// Gains (H . S)_T over atoms of holding `h` at `node` for one period only.
  Vector one_step_gain(std::size_t node, const Vector& h) const;

 private:
  FiniteMarket() : reference_(Vector::Ones(1)) {}

  std::vector<int> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<Vector> prices_;
  std::vector<int> depth_;
  std::vector<std::size_t> atom_node_;
  std::vector<std::vector<std::size_t>> paths_;
  std::size_t num_assets_ = 0;
  int horizon_ = 0;
  ProbabilityMeasure reference_;
};

/// N illiquid payoffs over the atoms, stored as an (atoms x N) matrix.
class EndowmentBundle {
 public:
  EndowmentBundle() = default;
  EndowmentBundle(std::size_t num_atoms, Matrix payoffs);
  static EndowmentBundle empty(std::size_t num_atoms) { return {num_atoms, Matrix(static_cast<Eigen::Index>(num_atoms), 0)}; }
  static EndowmentBundle from_spec(std::size_t num_atoms, const std::vector<std::vector<double>>& payoffs);

  std::size_t size() const { return static_cast<std::size_t>(payoffs_.cols()); }
  std::size_t num_atoms() const { return static_cast<std::size_t>(payoffs_.rows()); }
  const Matrix& payoffs() const { return payoffs_; }
  /// sum_j q_j f^j over atoms.
  Vector position(const Vector& q) const;
  /// (E^Q f^1, ..., E^Q f^N).
  Vector price(const Vector& q_measure) const { return payoffs_.transpose() * q_measure; }

 private:
  Matrix payoffs_;
};

/// The set of martingale measures of a finite market: homogeneous equality
/// rows (A Q = 0) together with sum(Q) = 1, Q >= 0, and its extreme points.
class MartingaleMeasurePolytope {
 public:
  /// Vertices are assembled node by node: each one-step kernel polytope is
  /// enumerated by basis enumeration and the global extreme points are the
  /// path products of extreme kernels.
  static MartingaleMeasurePolytope from_market(const FiniteMarket& market);
  /// A polytope reduced to one measure (complete markets given directly by
  /// their pricing measure).
  static MartingaleMeasurePolytope singleton(const Vector& q);

  std::size_t num_atoms() const { return static_cast<std::size_t>(constraints_.cols()); }
  std::size_t num_vertices() const { return vertices_.size(); }
  const std::vector<Vector>& vertices() const { return vertices_; }
  /// atoms x K matrix whose columns are the vertices.
  Matrix vertex_matrix() const;
  const Matrix& constraints() const { return constraints_; }

  /// Max violation of the H-representation by `q`.
  double constraint_violation(const Vector& q) const;
  Vector barycenter() const;
  /// Maximizer of sum_i log Q_i over the polytope.
  Vector analytic_center() const;
  /// True iff some strictly positive measure lies in the polytope.
  bool has_equivalent_measure() const;

  /// Vertex prices E^{Q_k} f, one N-vector per vertex.
  std::vector<Vector> vertex_prices(const EndowmentBundle& f) const;

 private:
  Matrix constraints_;
  std::vector<Vector> vertices_;
};

/// Throws NoMartingaleMeasure when no equivalent martingale measure exists.
MartingaleMeasurePolytope martingale_measures(const FiniteMarket& market);

struct ArbitrageStrategy {
  std::size_t node = 0;
  Vector holdings;       // risky-asset position held over one period at `node`
  Vector terminal_gain;  // (H . S)_T per atom
};

struct NflvrReport {
  bool holds = false;
  std::optional<Vector> measure;             // equivalent martingale measure (analytic center)
  std::optional<ArbitrageStrategy> arbitrage;
};

NflvrReport check_nflvr(const FiniteMarket& market);

/// Arbitrage-free prices of f: the image of the equivalent martingale
/// measures under Q -> E^Q f, stored as the closed polytope with open
/// (relative-interior) membership semantics.
class PriceSet {
 public:
  static constexpr double kInteriorMargin = 1e-9;

  PriceSet() = default;
  explicit PriceSet(HullPolytope closure) : closure_(std::move(closure)) {}

  const HullPolytope& closure() const { return closure_; }
  const std::vector<Vector>& vertices() const { return closure_.vertices(); }
  std::size_t dimension() const { return closure_.ambient_dim(); }
  /// Open in R^N (nonempty interior).
  bool is_open() const { return closure_.full_dimensional(); }
  bool contains(const Vector& p, double margin = kInteriorMargin) const { return closure_.in_relative_interior(p, margin); }
  bool closure_contains(const Vector& p, double tol = 1e-9) const { return closure_.contains(p, tol); }

 private:
  HullPolytope closure_;
};

/// Throws EmptyBundle for N = 0.
PriceSet arbitrage_free_price_set(const MartingaleMeasurePolytope& polytope, const EndowmentBundle& f);

/// No nonzero combination of f is replicable; vacuously true for N = 0.
bool check_n_trad(const MartingaleMeasurePolytope& polytope, const EndowmentBundle& f);

/// max over martingale measures of E^Q[payoff].
double superreplication_cost(const MartingaleMeasurePolytope& polytope, const Vector& payoff);

/// Margin used to reject points on or next to the boundary of K and L.
inline constexpr double kConeMargin = 1e-9;

/// (x, q) interior to the cone of positions that can be financed.
bool membership_K(const MartingaleMeasurePolytope& polytope, const EndowmentBundle& f, double x, const Vector& q);

/// y > 0 and r / y an arbitrage-free price (relative interior).
bool membership_L(const MartingaleMeasurePolytope& polytope, const EndowmentBundle& f, double y, const Vector& r);

}  // namespace ustab
