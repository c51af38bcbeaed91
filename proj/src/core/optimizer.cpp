#include "ustab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "ustab/error.hpp"

namespace ustab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Armijo test with a fallback for steps whose decrease is below rounding:
// such a step is still taken when it lowers the optimality residual.
bool accept_step(double f_new, double f_old, double predicted, double sigma, double res_new, double res_old) {
  if (f_new <= f_old + sigma * predicted) return true;
  const bool flat = std::abs(f_new - f_old) <= 1e-14 * (1.0 + std::abs(f_old));
  return flat && res_new < res_old;
}

Matrix affine_directions(const Matrix& points, const Vector& center) {
  if (points.rows() == 0) return Matrix(0, 0);
  Matrix centered = points.colwise() - center;
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-10 * (1.0 + center.cwiseAbs().maxCoeff())) ++k;
  return svd.matrixU().leftCols(k);
}

}  // namespace

// ---------------------------------------------------------------------------

MarketModel::MarketModel(MartingaleMeasurePolytope polytope, EndowmentBundle f)
    : polytope_(std::move(polytope)), f_(std::move(f)) {
  if (polytope_.num_vertices() == 0) throw Error(ErrorCode::kNoMartingaleMeasure, "the polytope has no vertices");
  if (f_.num_atoms() != polytope_.num_atoms())
    throw Error(ErrorCode::kInvalidSpec, "endowments and measures disagree on the number of atoms");
  if (!polytope_.has_equivalent_measure())
    throw Error(ErrorCode::kNoMartingaleMeasure, "no martingale measure charges every atom");
  vertex_matrix_ = polytope_.vertex_matrix();
  vertex_prices_ = f_.size() == 0 ? Matrix(0, vertex_matrix_.cols()) : Matrix(f_.payoffs().transpose() * vertex_matrix_);
  if (f_.size() > 0) price_set_ = arbitrage_free_price_set(polytope_, f_);
}

double MarketModel::k_margin(double x, const Vector& q) const {
  if (static_cast<std::size_t>(q.size()) != num_claims()) throw Error(ErrorCode::kInvalidSpec, "q has the wrong dimension");
  if (q.size() == 0) return x;
  return x + (q.transpose() * vertex_prices_).minCoeff();
}

bool MarketModel::in_L(double y, const Vector& r) const {
  if (static_cast<std::size_t>(r.size()) != num_claims()) throw Error(ErrorCode::kInvalidSpec, "r has the wrong dimension");
  if (!(y > kConeMargin)) return false;
  if (r.size() == 0) return true;
  return price_set_->contains(r / y);
}

MarketModel MarketModel::without_claims() const {
  return {polytope_, EndowmentBundle::empty(num_atoms())};
}

// ---------------------------------------------------------------------------

PrimalSolution solve_primal(const MarketModel& model, const ProbabilityMeasure& p, const UtilityFunction& u, double x,
                            const Vector& q, const SolverOptions& opts) {
  if (p.size() != model.num_atoms()) throw Error(ErrorCode::kInvalidSpec, "measure and market disagree on atoms");
  if (!p.equivalent()) throw Error(ErrorCode::kNonPositiveProbability, "reference measure must charge every atom");
  if (!model.in_K(x, q))
    throw Error(ErrorCode::kInfeasibleStart, "(x, q) is not inside the cone K (margin " + fmt(model.k_margin(x, q)) + ")");

  const DualFunction v(u);
  const Matrix& m = model.vertex_matrix();
  const Vector& pw = p.weights();
  const auto kv = m.cols();
  const Vector b = q.size() == 0 ? Vector::Constant(kv, x) : Vector((Vector::Constant(kv, x) + model.vertex_prices().transpose() * q));

  auto density = [&](const Vector& lam) { return Vector((m * lam).cwiseQuotient(pw)); };
  auto objective = [&](const Vector& lam) {
    const Vector eta = density(lam);
    if (eta.minCoeff() <= 0.0) return kInf;
    double s = b.dot(lam);
    for (Eigen::Index i = 0; i < eta.size(); ++i) s += pw(i) * v.value(eta(i));
    return s;
  };
  auto payoff_of = [&](const Vector& eta) {
    Vector g(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) g(i) = u.inverse_marginal(eta(i));
    return g;
  };
  auto residual_of = [&](const Vector& lam, const Vector& grad) {
    double r = 0.0;
    for (Eigen::Index k = 0; k < kv; ++k) r = std::max(r, std::abs(std::min(lam(k), grad(k))));
    return r;
  };

  // start: uniform weights scaled so the averaged budget binds
  const Vector w = Vector::Constant(kv, 1.0 / static_cast<double>(kv));
  const Vector qbar = m * w;
  const double bbar = b.dot(w);
  auto spend = [&](double y) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < qbar.size(); ++i) s += qbar(i) * u.inverse_marginal(y * qbar(i) / pw(i));
    return s;
  };
  double lo = -60.0, hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (spend(std::exp(mid)) > bbar ? lo : hi) = mid;
  }
  Vector lam = std::exp(0.5 * (lo + hi)) * w;

  PrimalSolution sol;
  double res = kInf;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    const Vector eta = density(lam);
    const Vector g = payoff_of(eta);
    const Vector grad = b - m.transpose() * g;
    res = residual_of(lam, grad);
    if (res <= opts.tol) break;

    Vector rho(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) rho(i) = v.second_derivative(eta(i)) / pw(i);
    const Matrix hess = m.transpose() * rho.asDiagonal() * m;

    // projected Newton: variables at the bound with a pushing gradient are
    // moved by a scaled gradient step, the rest by a reduced Newton step
    const double eps = std::min(1e-6 * (1.0 + lam.sum()), res);
    std::vector<Eigen::Index> free, fixed;
    for (Eigen::Index k = 0; k < kv; ++k) (lam(k) <= eps && grad(k) > 0.0 ? fixed : free).push_back(k);
    Vector dir = Vector::Zero(kv);
    if (!free.empty()) {
      const auto nf = static_cast<Eigen::Index>(free.size());
      Matrix hf(nf, nf);
      Vector gf(nf);
      for (Eigen::Index i = 0; i < nf; ++i) {
        gf(i) = grad(free[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < nf; ++j) hf(i, j) = hess(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
      }
      const double reg = 1e-12 * (hf.diagonal().cwiseAbs().maxCoeff() + 1e-300);
      hf.diagonal().array() += reg;
      const Vector df = hf.ldlt().solve(-gf);
      for (Eigen::Index i = 0; i < nf; ++i) dir(free[static_cast<std::size_t>(i)]) = df(i);
    }
    for (auto k : fixed) dir(k) = -grad(k) / std::max(hess(k, k), 1e-300);

    const double f0 = objective(lam);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
      const Vector trial = (lam + t * dir).cwiseMax(0.0);
      const double ft = objective(trial);
      if (!std::isfinite(ft)) continue;
      const Vector eta_t = density(trial);
      const Vector grad_t = b - m.transpose() * payoff_of(eta_t);
      if (accept_step(ft, f0, grad.dot(trial - lam), opts.armijo, residual_of(trial, grad_t), res)) {
        lam = trial;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (res > std::max(100.0 * opts.tol, 1e-8))
    throw Error(ErrorCode::kSolverDiverged, "primal KKT residual " + fmt(res) + " after " + std::to_string(iter) + " iterations");

  // reduce to a minimal support (Caratheodory), deterministic in the vertex order
  const double small = 1e-14 * (1.0 + lam.sum());
  for (int pass = 0; pass < kv; ++pass) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index k = 0; k < kv; ++k)
      if (lam(k) > small) support.push_back(k);
      else lam(k) = 0.0;
    if (support.empty()) break;
    Matrix ms(m.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j) ms.col(static_cast<Eigen::Index>(j)) = m.col(support[j]);
    const Matrix ns = null_space(ms, 1e-10);
    if (ns.cols() == 0) break;
    Vector c = ns.col(0);
    if (c.maxCoeff() <= 0.0) c = -c;
    double step = kInf;
    std::size_t leave = 0;
    for (std::size_t j = 0; j < support.size(); ++j) {
      const auto cj = c(static_cast<Eigen::Index>(j));
      if (cj > 1e-12 && lam(support[j]) / cj < step) {
        step = lam(support[j]) / cj;
        leave = j;
      }
    }
    for (std::size_t j = 0; j < support.size(); ++j) lam(support[j]) -= step * c(static_cast<Eigen::Index>(j));
    lam(support[leave]) = 0.0;
    lam = lam.cwiseMax(0.0);
    sol.degenerate = true;
  }

  const Vector eta = density(lam);
  const Vector g = payoff_of(eta);
  const Vector grad = b - m.transpose() * g;
  sol.x = x;
  sol.q = q;
  sol.payoff = g;
  sol.wealth = g - model.endowments().position(q);
  sol.density = Vector(g.size());
  sol.value = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    sol.density(i) = u.derivative(g(i));
    sol.value += pw(i) * u.value(g(i));
  }
  sol.marginal = lam.sum();
  sol.price_gradient = model.vertex_prices() * lam;
  sol.multipliers = lam;
  sol.kkt_residual = residual_of(lam, grad);
  sol.duality_gap = lam.dot(grad);
  sol.iterations = iter;
  return sol;
}

// ---------------------------------------------------------------------------

DualSolution solve_dual(const MarketModel& model, const ProbabilityMeasure& p, const DualFunction& v, double y,
                        const Vector& r, const SolverOptions& opts) {
  if (p.size() != model.num_atoms()) throw Error(ErrorCode::kInvalidSpec, "measure and market disagree on atoms");
  if (!p.equivalent()) throw Error(ErrorCode::kNonPositiveProbability, "reference measure must charge every atom");
  if (!model.in_L(y, r)) throw Error(ErrorCode::kInfeasibleStart, "(y, r) is not inside the cone L");

  const Vector& pw = p.weights();
  const auto n = static_cast<Eigen::Index>(model.num_atoms());
  const Matrix& a = model.polytope().constraints();
  const auto nf = static_cast<Eigen::Index>(model.num_claims());
  const Eigen::Index rows = a.rows() + 1 + nf;
  Matrix c(rows, n);
  Vector rhs = Vector::Zero(rows);
  if (a.rows() > 0) c.topRows(a.rows()) = a * pw.asDiagonal();
  c.row(a.rows()) = pw.transpose();
  rhs(a.rows()) = y;
  if (nf > 0) {
    c.bottomRows(nf) = model.endowments().payoffs().transpose() * pw.asDiagonal();
    rhs.tail(nf) = r;
  }
  const Matrix z = null_space(c, 1e-12);
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod_c(c);
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod_ct(c.transpose());

  // strictly positive start: barycenter of the slice {Q : E^Q f = r / y}
  const Matrix& m = model.vertex_matrix();
  Matrix sa(1 + nf, m.cols());
  sa.row(0).setOnes();
  if (nf > 0) sa.bottomRows(nf) = model.vertex_prices();
  Vector sb(1 + nf);
  sb(0) = 1.0;
  if (nf > 0) sb.tail(nf) = r / y;
  const auto slice = enumerate_vertices(sa, sb, 1e-11);
  if (slice.empty()) throw Error(ErrorCode::kInfeasibleStart, "no martingale measure prices f at r / y");
  Vector wbar = Vector::Zero(m.cols());
  for (const auto& w : slice) wbar += w;
  wbar /= static_cast<double>(slice.size());
  Vector h = y * (m * wbar).cwiseQuotient(pw);
  if (h.minCoeff() <= 0.0) throw Error(ErrorCode::kInfeasibleStart, "slice barycenter is not strictly positive");

  auto objective = [&](const Vector& hh) {
    if (hh.minCoeff() <= 0.0) return kInf;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += pw(i) * v.value(hh(i));
    return s;
  };
  auto gradient = [&](const Vector& hh) {
    Vector g(n);
    for (Eigen::Index i = 0; i < n; ++i) g(i) = pw(i) * v.derivative(hh(i));
    return g;
  };
  auto residual_of = [&](const Vector& grad) {
    if (z.cols() == 0) return 0.0;
    return Vector((z * (z.transpose() * grad)).cwiseQuotient(pw)).cwiseAbs().maxCoeff();
  };

  DualSolution sol;
  double res = residual_of(gradient(h));
  int iter = 0;
  for (; iter < opts.max_iter && res > opts.tol && z.cols() > 0; ++iter) {
    const Vector grad = gradient(h);
    Vector hd(n);
    for (Eigen::Index i = 0; i < n; ++i) hd(i) = pw(i) * v.second_derivative(h(i));
    const Matrix hr = z.transpose() * hd.asDiagonal() * z;
    const Vector gr = z.transpose() * grad;
    const Vector dir = z * hr.ldlt().solve(-gr);

    double t = 1.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (dir(i) < 0.0) t = std::min(t, -0.99 * h(i) / dir(i));
    const double f0 = objective(h);
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
      Vector trial = h + t * dir;
      if (trial.minCoeff() <= 0.0) continue;
      const double ft = objective(trial);
      if (accept_step(ft, f0, t * grad.dot(dir), opts.armijo, residual_of(gradient(trial)), res)) {
        h = trial;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    // pull back onto the affine slice if rounding has drifted off it
    const Vector fixed = h - cod_c.solve(c * h - rhs);
    if (fixed.minCoeff() > 0.0) h = fixed;
    res = residual_of(gradient(h));
  }
  if (res > std::max(100.0 * opts.tol, 1e-8))
    throw Error(ErrorCode::kSolverDiverged, "dual KKT residual " + fmt(res) + " after " + std::to_string(iter) + " iterations");

  const Vector grad = gradient(h);
  const Vector lam = cod_ct.solve(grad);
  sol.y = y;
  sol.r = r;
  sol.density = h;
  sol.pricing_measure = h.cwiseProduct(pw) / y;
  sol.value = objective(h);
  sol.dv_dy = lam(a.rows());
  sol.dv_dr = nf > 0 ? Vector(lam.tail(nf)) : Vector(0);
  sol.kkt_residual = res;
  sol.iterations = iter;
  if (m.cols() <= 64) sol.vertex_weights = enumerate_vertices(m, sol.pricing_measure, 1e-8);
  return sol;
}

// ---------------------------------------------------------------------------

Superdifferential superdifferential_u(const MarketModel& model, const ProbabilityMeasure& p, const UtilityFunction& u,
                                      double x, const Vector& q, const SolverOptions& opts) {
  const PrimalSolution primal = solve_primal(model, p, u, x, q, opts);
  const Matrix& m = model.vertex_matrix();
  const auto kv = m.cols();
  const auto nf = static_cast<Eigen::Index>(model.num_claims());
  const Vector b = nf == 0 ? Vector::Constant(kv, x) : Vector(Vector::Constant(kv, x) + model.vertex_prices().transpose() * q);
  const Vector slack = b - m.transpose() * primal.payoff;

  std::vector<Eigen::Index> active;
  for (Eigen::Index k = 0; k < kv; ++k)
    if (slack(k) <= 1e-7 * (1.0 + std::abs(b(k)))) active.push_back(k);
  const auto na = static_cast<Eigen::Index>(active.size());
  Matrix ma(m.rows(), na), pa(nf, na);
  for (Eigen::Index j = 0; j < na; ++j) {
    ma.col(j) = m.col(active[static_cast<std::size_t>(j)]);
    if (nf > 0) pa.col(j) = model.vertex_prices().col(active[static_cast<std::size_t>(j)]);
  }
  const Vector target = primal.density.cwiseProduct(p.weights());

  // optimal multipliers form a polytope; its image under mu -> (sum mu, P mu) is d u
  std::vector<Vector> points;
  for (const auto& mu : enumerate_vertices(ma, target, 1e-8)) {
    Vector pt(1 + nf);
    pt(0) = mu.sum();
    if (nf > 0) pt.tail(nf) = pa * mu;
    points.push_back(std::move(pt));
  }
  if (points.empty()) {
    Vector pt(1 + nf);
    pt(0) = primal.marginal;
    if (nf > 0) pt.tail(nf) = primal.price_gradient;
    points.push_back(std::move(pt));
  }

  std::vector<Vector> dirs;
  for (Eigen::Index i = 0; i < 1 + nf; ++i) {
    dirs.push_back(Vector::Unit(1 + nf, i));
    dirs.push_back(-Vector::Unit(1 + nf, i));
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 16; ++i) {
    Vector d(1 + nf);
    for (Eigen::Index j = 0; j < d.size(); ++j) d(j) = gauss(rng);
    dirs.push_back(d.normalized());
  }

  Superdifferential out;
  out.y = primal.marginal;
  for (const auto& d : dirs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
      if (d.dot(points[i]) > d.dot(points[best]) + 1e-12) best = i;
    const Vector rr = points[best].tail(nf);
    const bool seen = std::any_of(out.r.begin(), out.r.end(), [&](const Vector& o) {
      return o.size() == 0 || (o - rr).cwiseAbs().maxCoeff() <= 1e-9;
    });
    if (!seen) out.r.push_back(rr);
  }

  const DualFunction v(u);
  for (const auto& rr : out.r) {
    if (!model.in_L(out.y, rr)) continue;
    const auto dual = solve_dual(model, p, v, out.y, rr, opts);
    const double s = dual.value + x * out.y + (nf > 0 ? q.dot(rr) : 0.0) - primal.value;
    out.max_slack = std::max(out.max_slack, std::abs(s));
  }
  return out;
}

MarginalPriceSet marginal_price_set(const Superdifferential& du, const MarketModel& model) {
  MarginalPriceSet out;
  out.within_closure = true;
  for (const auto& r : du.r) {
    out.prices.push_back(r / du.y);
    if (model.price_set() && !model.price_set()->closure_contains(out.prices.back())) out.within_closure = false;
  }
  return out;
}

double first_order_link_residual(const PrimalSolution& primal, const DualSolution& dual, const UtilityFunction& u) {
  if (primal.payoff.size() != dual.density.size()) throw Error(ErrorCode::kInvalidSpec, "solutions live on different atoms");
  double r = 0.0;
  for (Eigen::Index i = 0; i < primal.payoff.size(); ++i)
    r = std::max(r, std::abs(dual.density(i) - u.derivative(primal.payoff(i))));
  return r;
}

double first_order_link_check(const MarketModel& model, const ProbabilityMeasure& p, const PrimalSolution& primal,
                              const DualSolution& dual, const UtilityFunction& u) {
  (void)model;
  (void)p;
  // Fenchel: v(y, r) + x y + <q, r> >= u(x, q), with equality exactly on d u(x, q)
  const double gap = dual.value + primal.x * dual.y + (primal.q.size() > 0 ? primal.q.dot(dual.r) : 0.0) - primal.value;
  if (gap > 1e-7 * (1.0 + std::abs(primal.value)))
    throw Error(ErrorCode::kMismatchedPair, "(y, r) is not a supergradient of u at (x, q): Fenchel gap " + fmt(gap));
  return first_order_link_residual(primal, dual, u);
}

// ---------------------------------------------------------------------------

namespace {

struct NewtonResult {
  double value = 0.0;
  double grad_norm = 0.0;
};

// Minimizes a smooth convex objective given value and gradient oracles using
// Newton steps with a central-difference Hessian of the gradient.
template <class Eval, class Feasible>
NewtonResult newton_fd(Vector z, const Eval& eval, const Feasible& feasible) {
  Vector grad;
  double f = eval(z, grad);
  const auto d = z.size();
  for (int iter = 0; iter < 60; ++iter) {
    if (grad.cwiseAbs().maxCoeff() < 1e-10) break;
    Matrix hess(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double h = 1e-5 * (1.0 + std::abs(z(j)));
      Vector zp = z, zm = z, gp, gm;
      zp(j) += h;
      zm(j) -= h;
      if (!feasible(zp) || !feasible(zm)) {
        zp = z;
        zp(j) += 0.1 * h;
        zm = z;
        (void)eval(zp, gp);
        hess.col(j) = (gp - grad) / (0.1 * h);
        continue;
      }
      (void)eval(zp, gp);
      (void)eval(zm, gm);
      hess.col(j) = (gp - gm) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    Vector step = -hess.completeOrthogonalDecomposition().solve(grad);
    if (!(step.dot(grad) < 0.0)) step = -grad;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Vector trial = z + t * step;
      if (!feasible(trial)) continue;
      Vector gt;
      const double ft = eval(trial, gt);
      if (ft <= f + 1e-4 * t * grad.dot(step) ||
          (std::abs(ft - f) <= 1e-14 * (1.0 + std::abs(f)) && gt.norm() < grad.norm())) {
        z = trial;
        f = ft;
        grad = gt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return {f, grad.cwiseAbs().maxCoeff()};
}

}  // namespace

ConjugacyReport conjugacy_check(const MarketModel& model, const ProbabilityMeasure& p, const UtilityFunction& u,
                                const PointList& k_points, const PointList& l_points, const SolverOptions& opts) {
  ConjugacyReport rep;
  const DualFunction v(u);
  const auto nf = static_cast<Eigen::Index>(model.num_claims());

  rep.dual_at_zero_claims = solve_dual(model.without_claims(), p, v, 1.0, Vector(0), opts).value;

  // L is parameterized as r = y pc + E s, an affine chart of its linear hull
  const Vector pc = nf > 0 ? model.endowments().price(model.polytope().analytic_center()) : Vector(0);
  const Matrix e = affine_directions(model.vertex_prices(), pc);
  const auto ke = e.cols();
  auto to_yr = [&](const Vector& z) {
    Vector r = nf > 0 ? Vector(z(0) * pc) : Vector(0);
    if (ke > 0) r += e * z.tail(ke);
    return std::make_pair(z(0), r);
  };

  for (const auto& [x, q] : k_points) {
    const double uval = solve_primal(model, p, u, x, q, opts).value;
    auto feasible = [&](const Vector& z) {
      const auto [y, r] = to_yr(z);
      return model.in_L(y, r);
    };
    auto eval = [&](const Vector& z, Vector& grad) {
      const auto [y, r] = to_yr(z);
      const auto d = solve_dual(model, p, v, y, r, opts);
      grad.resize(1 + ke);
      const Vector gr = nf > 0 ? Vector(d.dv_dr + q) : Vector(0);
      grad(0) = d.dv_dy + x + (nf > 0 ? gr.dot(pc) : 0.0);
      if (ke > 0) grad.tail(ke) = e.transpose() * gr;
      return d.value + x * y + (nf > 0 ? q.dot(r) : 0.0);
    };
    Vector z0 = Vector::Zero(1 + ke);
    z0(0) = 1.0;
    const auto res = newton_fd(z0, eval, feasible);
    rep.primal_residuals.push_back(std::abs(uval - res.value));
  }

  for (const auto& [y, r] : l_points) {
    const double vval = solve_dual(model, p, v, y, r, opts).value;
    auto feasible = [&](const Vector& z) { return model.in_K(z(0), z.tail(nf)); };
    // maximize u - x y - <q, r> by minimizing its negative
    auto eval = [&](const Vector& z, Vector& grad) {
      const Vector q = z.tail(nf);
      const auto s = solve_primal(model, p, u, z(0), q, opts);
      grad.resize(1 + nf);
      grad(0) = -(s.marginal - y);
      if (nf > 0) grad.tail(nf) = -(s.price_gradient - r);
      return -(s.value - z(0) * y - (nf > 0 ? q.dot(r) : 0.0));
    };
    Vector z0 = Vector::Zero(1 + nf);
    z0(0) = 1.0;
    const auto res = newton_fd(z0, eval, feasible);
    rep.dual_residuals.push_back(std::abs(vval + res.value));
  }

  for (double r : rep.primal_residuals) rep.primal_residual = std::max(rep.primal_residual, r);
  for (double r : rep.dual_residuals) rep.dual_residual = std::max(rep.dual_residual, r);
  rep.max_residual = std::max(rep.primal_residual, rep.dual_residual);
  return rep;
}

}  // namespace ustab
