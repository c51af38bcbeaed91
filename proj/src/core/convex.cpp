#include "ustab/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ustab/error.hpp"

namespace ustab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cross(double ax, double ay, double bx, double by, double cx, double cy) {
  return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

}  // namespace

GridFunction::GridFunction(std::vector<double> x, std::vector<double> y, Shape shape)
    : x_(std::move(x)), y_(std::move(y)), shape_(shape) {
  if (x_.size() < 2 || x_.size() != y_.size()) throw Error(ErrorCode::kInvalidSpec, "a grid function needs two or more samples");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1])) throw Error(ErrorCode::kInvalidSpec, "grid must increase strictly");
  if (shape_ == Shape::kNone) return;
  // declared shape checked through consecutive slopes
  const double sign = shape_ == Shape::kConvex ? 1.0 : -1.0;
  for (std::size_t i = 1; i + 1 < x_.size(); ++i) {
    const double s0 = (y_[i] - y_[i - 1]) / (x_[i] - x_[i - 1]);
    const double s1 = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    if (sign * (s1 - s0) < -1e-10 * (1.0 + std::abs(s0) + std::abs(s1)))
      throw Error(ErrorCode::kInvalidSpec, "samples do not match the declared shape");
  }
}

GridFunction GridFunction::sample(const ScalarFunction& f, std::vector<double> grid, Shape shape) {
  std::vector<double> y;
  y.reserve(grid.size());
  for (double x : grid) y.push_back(f(x));
  return {std::move(grid), std::move(y), shape};
}

double GridFunction::operator()(double x) const {
  std::size_t i;
  if (x <= x_.front()) {
    i = 0;
  } else if (x >= x_.back()) {
    i = x_.size() - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
  }
  const double t = (x - x_[i]) / (x_[i + 1] - x_[i]);
  return y_[i] + t * (y_[i + 1] - y_[i]);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = hi;
  return g;
}

// ---------------------------------------------------------------------------

EpsilonExtension::EpsilonExtension(DualFunction v, double eps) : v_(std::move(v)), eps_(eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidSpec, "epsilon extension needs eps > 0");
  v_eps_ = v_.value(eps_);
  slope_eps_ = v_.derivative(eps_);
}

double EpsilonExtension::value(double y) const {
  return y >= eps_ ? v_.value(y) : v_eps_ + slope_eps_ * (y - eps_);
}

double EpsilonExtension::derivative(double y) const { return y >= eps_ ? v_.derivative(y) : slope_eps_; }

GridFunction EpsilonExtension::sample(const std::vector<double>& grid) const {
  return GridFunction::sample([this](double y) { return value(y); }, grid, Shape::kConvex);
}

GridFunction convex_minorant(const std::vector<ScalarFunction>& family, const std::vector<double>& grid) {
  if (family.empty()) throw Error(ErrorCode::kInvalidSpec, "convex minorant of an empty family");
  std::vector<double> inf(grid.size(), kInf);
  for (const auto& f : family)
    for (std::size_t i = 0; i < grid.size(); ++i) inf[i] = std::min(inf[i], f(grid[i]));

  // lower hull by a monotone chain
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    while (hull.size() >= 2) {
      const auto a = hull[hull.size() - 2], b = hull.back();
      if (cross(grid[a], inf[a], grid[b], inf[b], grid[i], inf[i]) <= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  std::vector<double> y(grid.size());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    while (seg + 2 < hull.size() && grid[hull[seg + 1]] <= grid[i]) ++seg;
    const auto a = hull[seg], b = hull[std::min(seg + 1, hull.size() - 1)];
    if (a == b) {
      y[i] = inf[a];
    } else {
      const double t = (grid[i] - grid[a]) / (grid[b] - grid[a]);
      y[i] = inf[a] + t * (inf[b] - inf[a]);
    }
  }
  return {grid, std::move(y), Shape::kConvex};
}

GridFunction convex_minorant(const std::vector<DualFunction>& family, const std::vector<double>& grid) {
  std::vector<ScalarFunction> fs;
  fs.reserve(family.size());
  for (const auto& v : family) fs.emplace_back([v](double y) { return v.value(y); });
  return convex_minorant(fs, grid);
}

GridFunction average_function(const GridFunction& f) {
  std::vector<double> y(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(f.xs()[i] > 0.0)) throw Error(ErrorCode::kInvalidSpec, "average function needs a positive grid");
    y[i] = f.ys()[i] / f.xs()[i];
  }
  return {f.xs(), std::move(y)};
}

AverageDiagnostics average_diagnostics(const GridFunction& average) {
  AverageDiagnostics d;
  d.value_at_one = average(1.0);
  d.tail_value = average.ys().back();
  d.increasing_on_tail = true;
  double prev = -kInf;
  for (std::size_t i = 0; i < average.size(); ++i) {
    if (average.xs()[i] < 1.0 - 1e-12) continue;
    if (average.ys()[i] < prev - 1e-12) d.increasing_on_tail = false;
    prev = average.ys()[i];
  }
  return d;
}

double perspective(const EpsilonExtension& v, double z, double y) {
  if (z > 0.0) return z * v.value(y / z);
  if (z == 0.0) return y >= 0.0 ? 0.0 : y * v.derivative(v.eps());
  return kInf;
}

double legendre_numeric(const ScalarFunction& f, double s, double lo, double hi) {
  constexpr int kGrid = 480;
  const double a0 = std::log(lo), b0 = std::log(hi);
  auto g = [&](double t) {
    const double y = std::exp(t);
    return s * y - f(y);
  };
  const double step = (b0 - a0) / kGrid;
  int best = 0;
  double best_val = -kInf;
  for (int i = 0; i <= kGrid; ++i) {
    const double v = g(a0 + step * i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = a0 + step * std::max(best - 1, 0), b = a0 + step * std::min(best + 1, kGrid);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (gc > gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - gr * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + gr * (b - a);
      gd = g(d);
    }
  }
  return std::max({best_val, gc, gd});
}

// ---------------------------------------------------------------------------

EpiReport check_epi_convergence(const std::function<double(int, double)>& f_n, int n_max, const ScalarFunction& f,
                                const std::vector<double>& probes, double tol, double lo, double hi) {
  if (n_max < 1) throw Error(ErrorCode::kInvalidSpec, "n_max must be positive");
  EpiReport r;
  r.gap_by_n.assign(static_cast<std::size_t>(n_max), 0.0);
  for (int n = 1; n <= n_max; ++n) {
    const double h = 1.0 / n;
    double liminf = 0.0, recovery = 0.0;
    for (double x : probes) {
      for (double xn : {x, x + h, x - h, x * (1.0 + h), x * (1.0 - h)}) {
        if (!(xn > lo && xn < hi)) continue;
        liminf = std::max(liminf, f(xn) - f_n(n, xn));
      }
      recovery = std::max(recovery, f_n(n, x) - f(x));
    }
    r.gap_by_n[static_cast<std::size_t>(n - 1)] = std::max(liminf, recovery);
    if (n == n_max) {
      r.liminf_gap = liminf;
      r.recovery_gap = recovery;
    }
  }
  const int tail_start = std::max(1, static_cast<int>(std::ceil(0.9 * n_max)));
  for (int n = tail_start; n <= n_max; ++n) r.worst_gap = std::max(r.worst_gap, r.gap_by_n[static_cast<std::size_t>(n - 1)]);
  r.converges = r.worst_gap <= tol;
  return r;
}

bool Interval::bounded() const { return std::isfinite(lo) && std::isfinite(hi); }

Interval subdifferential(const ScalarFunction& f, double x, double lo, double hi) {
  constexpr double h = 1e-3;
  if (!(x - h > lo) || !(x + h < hi)) throw Error(ErrorCode::kBoundaryPoint, "point too close to the domain boundary");
  const double fx = f(x);
  auto richardson = [&](double sign) {
    auto q = [&](double step) { return sign * (f(x + sign * step) - fx) / step; };
    const double d1 = q(h), d2 = q(h / 2), d3 = q(h / 4);
    const double r1 = 2.0 * d2 - d1, r2 = 2.0 * d3 - d2;
    return (4.0 * r2 - r1) / 3.0;
  };
  Interval out{richardson(-1.0), richardson(1.0)};
  if (out.lo > out.hi) out.lo = out.hi = 0.5 * (out.lo + out.hi);
  return out;
}

double interval_excess(const Interval& a, const Interval& b) {
  return std::max({0.0, b.lo - a.lo, a.hi - b.hi});
}

GraphicalReport check_graphical_convergence(const std::function<Interval(int)>& subdiff_n, const Interval& limit,
                                            int n_max, double tol, double bound, const std::vector<double>& eps) {
  if (n_max < 1) throw Error(ErrorCode::kInvalidSpec, "n_max must be positive");
  GraphicalReport r;
  auto too_big = [bound](const Interval& i) {
    return !i.bounded() || std::abs(i.lo) > bound || std::abs(i.hi) > bound;
  };
  r.unbounded = too_big(limit);
  r.distance_by_n.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    const Interval in = subdiff_n(n);
    if (too_big(in)) r.unbounded = true;
    r.distance_by_n.push_back(interval_excess(in, limit));
  }
  r.final_distance = r.distance_by_n.back();
  const int tail_start = std::max(1, static_cast<int>(std::ceil(0.9 * n_max)));
  double tail = 0.0;
  for (int n = tail_start; n <= n_max; ++n) tail = std::max(tail, r.distance_by_n[static_cast<std::size_t>(n - 1)]);
  r.inclusion_holds = tail <= tol;
  if (r.unbounded) return r;
  for (double e : eps) {
    int first = -1;
    for (int n = n_max; n >= 1; --n) {
      if (r.distance_by_n[static_cast<std::size_t>(n - 1)] >= e) break;
      first = n;
    }
    r.n_of_eps.emplace_back(e, first);
  }
  return r;
}

// ---------------------------------------------------------------------------

double asymptotic_elasticity(const UtilityFunction& u, double x0, double x_max) {
  if (!(x0 > 0.0) || !(x_max > x0)) throw Error(ErrorCode::kInvalidSpec, "elasticity range must satisfy 0 < x0 < x_max");
  const auto decades = std::log10(x_max / x0);
  const auto n = static_cast<std::size_t>(std::max(2.0, std::ceil(50.0 * decades) + 1.0));
  double sup = -kInf;
  for (double x : log_grid(x0, x_max, n)) {
    const double ux = u.value(x);
    if (!(ux > 0.0)) throw Error(ErrorCode::kNotApplicable, "U is not positive beyond x0; elasticity undefined");
    sup = std::max(sup, x * u.derivative(x) / ux);
  }
  return sup;
}

RaeVerdict uniform_rae(const std::vector<UtilityFunction>& family, double x0, double x_max) {
  RaeVerdict v;
  v.x0 = x0;
  v.delta = -kInf;
  for (const auto& u : family) v.delta = std::max(v.delta, asymptotic_elasticity(u, x0, x_max));
  v.uniform = v.delta < 1.0;
  return v;
}

PowerGrowthBound power_growth_bound(const std::vector<UtilityFunction>& family) {
  if (family.empty()) throw Error(ErrorCode::kInvalidSpec, "power growth bound of an empty family");
  const auto grid = log_grid(1e-6, 1e6, 1201);
  const auto ygrid = log_grid(1e-3, 1.0, 121);
  for (int k = 1; k < 100; ++k) {
    const double a = k / 100.0;
    double c = 0.0;
    bool ok = true;
    for (const auto& u : family) {
      const double x1 = 1e4, x2 = 1e5, x3 = 1e6;
      const double lower = (u.value(x2) - u.value(x1)) / (std::pow(x2, a) - std::pow(x1, a));
      const double upper = (u.value(x3) - u.value(x2)) / (std::pow(x3, a) - std::pow(x2, a));
      if (upper > lower * (1.0 + 1e-9) + 1e-15) {
        ok = false;
        break;
      }
      c = std::max(c, std::max(upper, 1e-12));
    }
    if (!ok) continue;

    PowerGrowthBound b;
    b.alpha = a;
    b.c = c;
    b.d = -kInf;
    for (const auto& u : family)
      for (double x : grid) b.d = std::max(b.d, u.value(x) - c * std::pow(x, a));
    b.dual_c = ((1.0 - a) / a) * std::pow(c * a, 1.0 / (1.0 - a));
    b.dual_d = b.d;
    b.dual_violation = -kInf;
    for (const auto& u : family) {
      const DualFunction v(u);
      for (double y : ygrid)
        b.dual_violation = std::max(b.dual_violation, v.value(y) - (b.dual_c * std::pow(y, -a / (1.0 - a)) + b.dual_d));
    }
    return b;
  }
  throw Error(ErrorCode::kNoPowerBound, "no exponent alpha < 1 bounds the family on the tail");
}

}  // namespace ustab
