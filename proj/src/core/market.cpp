#include "ustab/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ustab/error.hpp"

namespace ustab {

namespace {

constexpr double kVertexTol = 1e-10;
constexpr double kMaxProductVertices = 1.0e6;

std::string idx(std::size_t i) { return std::to_string(i); }

// Extreme one-step kernels at `node`: pi >= 0, sum pi = 1, sum pi_c (S_c - S_node) = 0.
std::vector<Vector> node_kernels(const FiniteMarket& m, std::size_t node) {
  const auto& kids = m.children(node);
  const auto k = static_cast<Eigen::Index>(kids.size());
  const auto d = static_cast<Eigen::Index>(m.num_assets());
  Matrix a(d + 1, k);
  Vector b = Vector::Zero(d + 1);
  for (Eigen::Index c = 0; c < k; ++c) {
    a.block(0, c, d, 1) = m.price(kids[static_cast<std::size_t>(c)]) - m.price(node);
    a(d, c) = 1.0;
  }
  b(d) = 1.0;
  return enumerate_vertices(a, b, kVertexTol);
}

}  // namespace

// ---------------------------------------------------------------------------

ProbabilityMeasure::ProbabilityMeasure(Vector weights, double tol) : weights_(std::move(weights)) {
  if (weights_.size() == 0) throw Error(ErrorCode::kInvalidSpec, "probability measure with no atoms");
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_(i)) || weights_(i) < 0.0)
      throw Error(ErrorCode::kNonPositiveProbability, "weight " + idx(static_cast<std::size_t>(i)) + " is negative or not finite");
  }
  if (std::abs(weights_.sum() - 1.0) > tol)
    throw Error(ErrorCode::kInvalidSpec, "weights sum to " + std::to_string(weights_.sum()) + ", not 1");
}

ProbabilityMeasure ProbabilityMeasure::reweighted(const Vector& z) const {
  if (z.size() != weights_.size()) throw Error(ErrorCode::kInvalidSpec, "density has the wrong number of atoms");
  return ProbabilityMeasure(weights_.cwiseProduct(z), 1e-9);
}

double total_variation(const ProbabilityMeasure& a, const ProbabilityMeasure& b) {
  return 0.5 * (a.weights() - b.weights()).cwiseAbs().sum();
}

// ---------------------------------------------------------------------------

FiniteMarket FiniteMarket::build(const MarketSpec& spec) {
  FiniteMarket m;
  const std::size_t n = spec.parent.size();
  if (n < 3) throw Error(ErrorCode::kDegenerateBranching, "a market needs a root with at least two children");
  if (spec.prices.size() != n) throw Error(ErrorCode::kInvalidSpec, "prices must list one row per node");

  m.parent_ = spec.parent;
  m.children_.assign(n, {});
  m.depth_.assign(n, 0);
  if (spec.parent[0] != -1) throw Error(ErrorCode::kDisconnectedTree, "node 0 must be the root (parent -1)");
  for (std::size_t i = 1; i < n; ++i) {
    const int p = spec.parent[i];
    if (p < 0 || static_cast<std::size_t>(p) >= i)
      throw Error(ErrorCode::kDisconnectedTree, "node " + idx(i) + " has parent " + std::to_string(p) +
                                                    " (parents must precede their children)");
    m.children_[static_cast<std::size_t>(p)].push_back(i);
    m.depth_[i] = m.depth_[static_cast<std::size_t>(p)] + 1;
  }

  m.num_assets_ = spec.prices[0].size();
  if (m.num_assets_ == 0) throw Error(ErrorCode::kInvalidSpec, "at least one risky asset is required");
  m.prices_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.prices[i].size() != m.num_assets_)
      throw Error(ErrorCode::kInvalidSpec, "node " + idx(i) + " lists the wrong number of prices");
    Vector s(static_cast<Eigen::Index>(m.num_assets_));
    for (std::size_t j = 0; j < m.num_assets_; ++j) {
      if (!std::isfinite(spec.prices[i][j])) throw Error(ErrorCode::kInvalidSpec, "non-finite price at node " + idx(i));
      s(static_cast<Eigen::Index>(j)) = spec.prices[i][j];
    }
    m.prices_.push_back(std::move(s));
  }

  int horizon = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.children_[i].size() == 1)
      throw Error(ErrorCode::kDegenerateBranching, "node " + idx(i) + " has a single child");
    if (m.children_[i].empty()) {
      if (horizon >= 0 && m.depth_[i] != horizon)
        throw Error(ErrorCode::kInvalidSpec, "terminal nodes must all sit at the same depth");
      horizon = m.depth_[i];
      m.atom_node_.push_back(i);
    }
  }
  m.horizon_ = horizon;

  if (spec.atoms.size() != m.atom_node_.size())
    throw Error(ErrorCode::kInvalidSpec, "atoms lists " + idx(spec.atoms.size()) + " weights for " +
                                             idx(m.atom_node_.size()) + " terminal nodes");
  Vector w(static_cast<Eigen::Index>(spec.atoms.size()));
  for (std::size_t k = 0; k < spec.atoms.size(); ++k) {
    if (!(spec.atoms[k] > 0.0) || !std::isfinite(spec.atoms[k]))
      throw Error(ErrorCode::kNonPositiveProbability, "atom " + idx(k) + " has weight " + std::to_string(spec.atoms[k]));
    w(static_cast<Eigen::Index>(k)) = spec.atoms[k];
  }
  m.reference_ = ProbabilityMeasure(std::move(w), 1e-12);

  m.paths_.resize(m.atom_node_.size());
  for (std::size_t k = 0; k < m.atom_node_.size(); ++k) {
    std::vector<std::size_t> path;
    for (int v = static_cast<int>(m.atom_node_[k]); v >= 0; v = m.parent_[static_cast<std::size_t>(v)])
      path.push_back(static_cast<std::size_t>(v));
    std::reverse(path.begin(), path.end());
    m.paths_[k] = std::move(path);
  }
  return m;
}

FiniteMarket FiniteMarket::one_period(const Vector& s0, const Matrix& s1, const Vector& probabilities) {
  MarketSpec spec;
  const auto states = static_cast<std::size_t>(s1.rows());
  spec.parent.push_back(-1);
  spec.prices.emplace_back(s0.data(), s0.data() + s0.size());
  for (std::size_t k = 0; k < states; ++k) {
    spec.parent.push_back(0);
    std::vector<double> row(static_cast<std::size_t>(s1.cols()));
    for (Eigen::Index j = 0; j < s1.cols(); ++j) row[static_cast<std::size_t>(j)] = s1(static_cast<Eigen::Index>(k), j);
    spec.prices.push_back(std::move(row));
  }
  spec.atoms.assign(probabilities.data(), probabilities.data() + probabilities.size());
  return build(spec);
}

bool FiniteMarket::in_subtree(std::size_t atom, std::size_t node) const {
  const auto d = static_cast<std::size_t>(depth_[node]);
  return d < paths_[atom].size() && paths_[atom][d] == node;
}

Matrix FiniteMarket::martingale_constraints() const {
  std::vector<std::size_t> inner;
  for (std::size_t i = 0; i < num_nodes(); ++i)
    if (!is_terminal(i)) inner.push_back(i);
  const auto d = static_cast<Eigen::Index>(num_assets_);
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(inner.size()) * d, static_cast<Eigen::Index>(num_atoms()));
  for (std::size_t r = 0; r < inner.size(); ++r) {
    const std::size_t node = inner[r];
    for (std::size_t w = 0; w < num_atoms(); ++w) {
      if (!in_subtree(w, node)) continue;
      const std::size_t next = ancestor(w, depth_[node] + 1);
      const Vector delta = prices_[next] - prices_[node];
      for (Eigen::Index j = 0; j < d; ++j) a(static_cast<Eigen::Index>(r) * d + j, static_cast<Eigen::Index>(w)) = delta(j);
    }
  }
  return a;
}

Vector FiniteMarket::one_step_gain(std::size_t node, const Vector& h) const {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(num_atoms()));
  for (std::size_t w = 0; w < num_atoms(); ++w) {
    if (!in_subtree(w, node) || is_terminal(node)) continue;
    const std::size_t next = ancestor(w, depth_[node] + 1);
    g(static_cast<Eigen::Index>(w)) = h.dot(prices_[next] - prices_[node]);
  }
  return g;
}

// ---------------------------------------------------------------------------

EndowmentBundle::EndowmentBundle(std::size_t num_atoms, Matrix payoffs) : payoffs_(std::move(payoffs)) {
  if (static_cast<std::size_t>(payoffs_.rows()) != num_atoms)
    throw Error(ErrorCode::kInvalidSpec, "endowment payoffs must have one entry per atom");
  if (!payoffs_.allFinite()) throw Error(ErrorCode::kInvalidSpec, "endowment payoffs must be finite");
}

EndowmentBundle EndowmentBundle::from_spec(std::size_t num_atoms, const std::vector<std::vector<double>>& payoffs) {
  Matrix m(static_cast<Eigen::Index>(num_atoms), static_cast<Eigen::Index>(payoffs.size()));
  for (std::size_t j = 0; j < payoffs.size(); ++j) {
    if (payoffs[j].size() != num_atoms)
      throw Error(ErrorCode::kInvalidSpec, "endowment " + idx(j) + " has " + idx(payoffs[j].size()) + " entries for " +
                                               idx(num_atoms) + " atoms");
    for (std::size_t i = 0; i < num_atoms; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = payoffs[j][i];
  }
  return {num_atoms, std::move(m)};
}

Vector EndowmentBundle::position(const Vector& q) const {
  if (q.size() != payoffs_.cols()) throw Error(ErrorCode::kInvalidSpec, "position has the wrong dimension");
  if (q.size() == 0) return Vector::Zero(payoffs_.rows());
  return payoffs_ * q;
}

// ---------------------------------------------------------------------------

MartingaleMeasurePolytope MartingaleMeasurePolytope::from_market(const FiniteMarket& market) {
  MartingaleMeasurePolytope poly;
  poly.constraints_ = market.martingale_constraints();

  const std::size_t n = market.num_nodes();
  std::vector<std::vector<Vector>> kernels(n);
  std::vector<std::size_t> inner;
  double combos = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (market.is_terminal(i)) continue;
    kernels[i] = node_kernels(market, i);
    if (kernels[i].empty()) return poly;  // some node admits no martingale kernel
    inner.push_back(i);
    combos *= static_cast<double>(kernels[i].size());
  }
  if (combos > kMaxProductVertices) throw Error(ErrorCode::kInvalidSpec, "too many extreme martingale measures to enumerate");

  std::vector<std::size_t> choice(n, 0);
  const auto atoms = static_cast<Eigen::Index>(market.num_atoms());
  while (true) {
    Vector q(atoms);
    for (Eigen::Index w = 0; w < atoms; ++w) {
      double mass = 1.0;
      for (int t = 0; t < market.horizon(); ++t) {
        const std::size_t node = market.ancestor(static_cast<std::size_t>(w), t);
        const std::size_t next = market.ancestor(static_cast<std::size_t>(w), t + 1);
        const auto& kids = market.children(node);
        const auto pos = static_cast<Eigen::Index>(std::find(kids.begin(), kids.end(), next) - kids.begin());
        mass *= kernels[node][choice[node]](pos);
      }
      q(w) = mass;
    }
    const bool dup = std::any_of(poly.vertices_.begin(), poly.vertices_.end(),
                                 [&](const Vector& v) { return (v - q).cwiseAbs().maxCoeff() <= kVertexTol; });
    if (!dup) poly.vertices_.push_back(std::move(q));

    // odometer over the per-node choices
    std::size_t k = 0;
    for (; k < inner.size(); ++k) {
      const std::size_t node = inner[k];
      if (++choice[node] < kernels[node].size()) break;
      choice[node] = 0;
    }
    if (k == inner.size()) break;
  }
  return poly;
}

MartingaleMeasurePolytope MartingaleMeasurePolytope::singleton(const Vector& q) {
  if (q.size() == 0 || q.minCoeff() < 0.0 || std::abs(q.sum() - 1.0) > 1e-12)
    throw Error(ErrorCode::kInvalidSpec, "singleton pricing measure must be a probability vector");
  MartingaleMeasurePolytope poly;
  const Matrix row = q.transpose();
  poly.constraints_ = null_space(row, 1e-14).transpose();
  poly.vertices_.push_back(q);
  return poly;
}

Matrix MartingaleMeasurePolytope::vertex_matrix() const {
  Matrix m(static_cast<Eigen::Index>(num_atoms()), static_cast<Eigen::Index>(vertices_.size()));
  for (std::size_t k = 0; k < vertices_.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = vertices_[k];
  return m;
}

double MartingaleMeasurePolytope::constraint_violation(const Vector& q) const {
  double v = std::abs(q.sum() - 1.0);
  v = std::max(v, std::max(0.0, -q.minCoeff()));
  if (constraints_.rows() > 0) v = std::max(v, (constraints_ * q).cwiseAbs().maxCoeff());
  return v;
}

Vector MartingaleMeasurePolytope::barycenter() const {
  if (vertices_.empty()) throw Error(ErrorCode::kNoMartingaleMeasure, "the martingale-measure polytope is empty");
  Vector c = Vector::Zero(static_cast<Eigen::Index>(num_atoms()));
  for (const auto& v : vertices_) c += v;
  return c / static_cast<double>(vertices_.size());
}

bool MartingaleMeasurePolytope::has_equivalent_measure() const {
  return !vertices_.empty() && barycenter().minCoeff() > 0.0;
}

Vector MartingaleMeasurePolytope::analytic_center() const {
  if (!has_equivalent_measure())
    throw Error(ErrorCode::kNoMartingaleMeasure, "no strictly positive martingale measure");
  const auto n = static_cast<Eigen::Index>(num_atoms());
  Matrix eq(constraints_.rows() + 1, n);
  if (constraints_.rows() > 0) eq.topRows(constraints_.rows()) = constraints_;
  eq.row(constraints_.rows()) = Vector::Ones(n).transpose();
  const Matrix z = null_space(eq, 1e-12);
  Vector q = barycenter();
  if (z.cols() == 0) return q;

  // Damped Newton on sum log q over the affine hull.
  for (int iter = 0; iter < 100; ++iter) {
    const Vector grad = q.cwiseInverse();
    const Vector hdiag = q.cwiseInverse().cwiseAbs2();
    const Vector g = z.transpose() * grad;
    if (g.cwiseAbs().maxCoeff() < 1e-12) break;
    const Matrix h = z.transpose() * hdiag.asDiagonal() * z;
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

std::vector<Vector> MartingaleMeasurePolytope::vertex_prices(const EndowmentBundle& f) const {
  std::vector<Vector> out;
  out.reserve(vertices_.size());
  for (const auto& v : vertices_) out.push_back(f.price(v));
  return out;
}

MartingaleMeasurePolytope martingale_measures(const FiniteMarket& market) {
  auto poly = MartingaleMeasurePolytope::from_market(market);
  if (!poly.has_equivalent_measure())
    throw Error(ErrorCode::kNoMartingaleMeasure, "the polytope of martingale measures has no strictly positive point");
  return poly;
}

// ---------------------------------------------------------------------------

NflvrReport check_nflvr(const FiniteMarket& market) {
  NflvrReport report;
  const auto poly = MartingaleMeasurePolytope::from_market(market);
  if (poly.has_equivalent_measure()) {
    report.holds = true;
    report.measure = poly.analytic_center();
    return report;
  }

  // Locate a node whose one-step kernels cannot charge every child and build
  // a one-period strategy that never loses and wins somewhere.
  for (std::size_t node = 0; node < market.num_nodes(); ++node) {
    if (market.is_terminal(node)) continue;
    const auto kernels = node_kernels(market, node);
    const auto& kids = market.children(node);
    std::vector<bool> charged(kids.size(), false);
    for (const auto& k : kernels)
      for (std::size_t c = 0; c < kids.size(); ++c)
        if (k(static_cast<Eigen::Index>(c)) > kVertexTol) charged[c] = true;
    if (std::all_of(charged.begin(), charged.end(), [](bool b) { return b; })) continue;

    const auto d = static_cast<Eigen::Index>(market.num_assets());
    std::vector<Vector> in_support;
    for (std::size_t c = 0; c < kids.size(); ++c)
      if (charged[c]) in_support.push_back(market.price(kids[c]) - market.price(node));
    Matrix proj = Matrix::Identity(d, d);
    if (!in_support.empty()) {
      Matrix span(d, static_cast<Eigen::Index>(in_support.size()));
      for (std::size_t c = 0; c < in_support.size(); ++c) span.col(static_cast<Eigen::Index>(c)) = in_support[c];
      const Matrix comp = null_space(span.transpose(), 1e-12);
      proj = comp * comp.transpose();
    }
    std::vector<Vector> rest;
    for (std::size_t c = 0; c < kids.size(); ++c)
      if (!charged[c]) rest.push_back(proj * (market.price(kids[c]) - market.price(node)));
    const Vector h = min_norm_point(rest);
    if (h.norm() <= 1e-12) continue;

    ArbitrageStrategy arb;
    arb.node = node;
    arb.holdings = h;
    arb.terminal_gain = market.one_step_gain(node, h);
    report.arbitrage = std::move(arb);
    return report;
  }
  return report;
}

PriceSet arbitrage_free_price_set(const MartingaleMeasurePolytope& polytope, const EndowmentBundle& f) {
  if (f.size() == 0) throw Error(ErrorCode::kEmptyBundle, "no endowment to price");
  if (polytope.num_vertices() == 0) throw Error(ErrorCode::kNoMartingaleMeasure, "no martingale measures");
  return PriceSet(HullPolytope(polytope.vertex_prices(f)));
}

bool check_n_trad(const MartingaleMeasurePolytope& polytope, const EndowmentBundle& f) {
  if (f.size() == 0) return true;
  return arbitrage_free_price_set(polytope, f).is_open();
}

double superreplication_cost(const MartingaleMeasurePolytope& polytope, const Vector& payoff) {
  if (polytope.num_vertices() == 0) throw Error(ErrorCode::kNoMartingaleMeasure, "no martingale measures");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : polytope.vertices()) best = std::max(best, v.dot(payoff));
  return best;
}

bool membership_K(const MartingaleMeasurePolytope& polytope, const EndowmentBundle& f, double x, const Vector& q) {
  if (static_cast<std::size_t>(q.size()) != f.size()) throw Error(ErrorCode::kInvalidSpec, "q has the wrong dimension");
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& p : polytope.vertex_prices(f)) worst = std::min(worst, q.size() == 0 ? 0.0 : q.dot(p));
  return x + worst > kConeMargin;
}

bool membership_L(const MartingaleMeasurePolytope& polytope, const EndowmentBundle& f, double y, const Vector& r) {
  if (static_cast<std::size_t>(r.size()) != f.size()) throw Error(ErrorCode::kInvalidSpec, "r has the wrong dimension");
  if (!(y > kConeMargin)) return false;
  if (f.size() == 0) return true;
  return arbitrage_free_price_set(polytope, f).contains(r / y);
}

}  // namespace ustab
