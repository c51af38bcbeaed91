#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "ustab/utility.hpp"

namespace ustab {

using ScalarFunction = std::function<double(double)>;

enum class Shape { kConvex, kConcave, kNone };

/// Samples of a function on a strictly increasing grid, read back by linear
/// interpolation (and linear extrapolation past the ends). A declared convex
/// or concave shape is checked on construction (slopes monotone to 1e-10).
class GridFunction {
 public:
  GridFunction(std::vector<double> x, std::vector<double> y, Shape shape = Shape::kNone);
  static GridFunction sample(const ScalarFunction& f, std::vector<double> grid, Shape shape = Shape::kNone);

  const std::vector<double>& xs() const { return x_; }
  const std::vector<double>& ys() const { return y_; }
  Shape shape() const { return shape_; }
  std::size_t size() const { return x_.size(); }
  double operator()(double x) const;

 private:
  std::vector<double> x_, y_;
  Shape shape_;
};

std::vector<double> log_grid(double lo, double hi, std::size_t n);
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

/// V^eps: V on [eps, inf) and its tangent at eps below eps (defined on the
/// whole line). Convex, C^1, bounded above near zero.
class EpsilonExtension {
 public:
  EpsilonExtension(DualFunction v, double eps);

  double eps() const { return eps_; }
  const DualFunction& base() const { return v_; }
  double value(double y) const;
  double derivative(double y) const;
  GridFunction sample(const std::vector<double>& grid) const;

 private:
  DualFunction v_;
  double eps_;
  double v_eps_, slope_eps_;
};

/// Largest convex function below inf_n f_n, computed as the lower convex hull
/// of the pointwise infimum sampled on `grid`.
GridFunction convex_minorant(const std::vector<ScalarFunction>& family, const std::vector<double>& grid);
GridFunction convex_minorant(const std::vector<DualFunction>& family, const std::vector<double>& grid);

/// x -> f(x) / x on the grid of `f` (grid points must be positive).
GridFunction average_function(const GridFunction& f);

struct AverageDiagnostics {
  bool increasing_on_tail = false;  // nondecreasing on [1, inf) within 1e-12
  double value_at_one = 0.0;
  double tail_value = 0.0;          // value at the largest grid point
};
AverageDiagnostics average_diagnostics(const GridFunction& average);

/// (z, y) -> z V^eps(y / z) for z > 0; at z = 0 the recession function of
/// V^eps (0 for y >= 0, y V'(eps) for y < 0); +inf for z < 0.
double perspective(const EpsilonExtension& v, double z, double y);

/// sup over the bracket of s * y - f(y), by log-grid search and golden-section
/// refinement (y ranges over [lo, hi], lo > 0).
double legendre_numeric(const ScalarFunction& f, double s, double lo = 1e-12, double hi = 1e12);

struct EpiReport {
  bool converges = false;
  double worst_gap = 0.0;      // max of both gaps over the tail of the sequence
  double liminf_gap = 0.0;     // at the last index
  double recovery_gap = 0.0;   // at the last index
  std::vector<double> gap_by_n;
};

/// Numerical epi-limit test of f_n -> f at the probe points.
///   liminf gap at (n, x): max(0, f(x_n) - f_n(x_n)) over x_n in
///     {x, x +- 1/n, x (1 +- 1/n)} inside (lo, hi);
///   recovery gap at (n, x): max(0, f_n(x) - f(x)) along the constant sequence.
/// The sequence converges when the largest gap over n in [0.9 n_max, n_max]
/// is at most `tol`.
EpiReport check_epi_convergence(const std::function<double(int, double)>& f_n, int n_max, const ScalarFunction& f,
                                const std::vector<double>& probes, double tol, double lo = 0.0,
                                double hi = std::numeric_limits<double>::infinity());

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool bounded() const;
  double width() const { return hi - lo; }
  bool degenerate(double tol = 1e-6) const { return width() <= tol; }
};

/// [f'_-(x), f'_+(x)] for a convex f, from one-sided difference quotients at
/// h = 1e-3, 5e-4, 2.5e-4 combined by Richardson extrapolation. Throws
/// BoundaryPoint when x is within 1e-3 of the domain ends.
Interval subdifferential(const ScalarFunction& f, double x, double lo = 0.0,
                         double hi = std::numeric_limits<double>::infinity());

/// Excess of interval `a` over `b`: max(0, b.lo - a.lo, a.hi - b.hi).
double interval_excess(const Interval& a, const Interval& b);

struct GraphicalReport {
  bool unbounded = false;           // some subdifferential was unbounded; part (b) skipped
  bool inclusion_holds = false;     // tail excess <= tol
  double final_distance = 0.0;
  std::vector<double> distance_by_n;
  std::vector<std::pair<double, int>> n_of_eps;  // -1 when never reached
};

/// (a) limit points of d f_n(x_n) lie in d f(x), measured by the excess of
///     each interval over the limit one on the tail of the sequence;
/// (b) the index beyond which the excess stays below each eps.
GraphicalReport check_graphical_convergence(const std::function<Interval(int)>& subdiff_n, const Interval& limit,
                                            int n_max, double tol = 1e-6, double bound = 1e8,
                                            const std::vector<double>& eps = {1e-1, 1e-2, 1e-3});

/// sup_{x >= x0} x U'(x) / U(x) over a geometric grid up to `x_max`.
/// Throws NotApplicable when U <= 0 somewhere on that range.
double asymptotic_elasticity(const UtilityFunction& u, double x0, double x_max = 1e6);

struct RaeVerdict {
  double delta = 0.0;
  bool uniform = false;  // delta < 1
  double x0 = 0.0;
};
RaeVerdict uniform_rae(const std::vector<UtilityFunction>& family, double x0, double x_max = 1e6);

struct PowerGrowthBound {
  double alpha = 0.0;  // U_n(x) <= c x^alpha + d for all members
  double c = 0.0;
  double d = 0.0;
  double dual_c = 0.0;  // V_n(y) <= dual_c y^{-alpha/(1-alpha)} + dual_d
  double dual_d = 0.0;
  double dual_violation = 0.0;  // max of V_n - bound over the check grid
};

/// Smallest grid alpha = k/100 for which every member satisfies
/// U_n(x) <= c x^alpha + d on the tail, with c fitted from secants over the
/// last two decades up to 1e6 and d the largest excess on [1e-6, 1e6].
/// Throws NoPowerBound when no alpha < 1 on the grid works.
PowerGrowthBound power_growth_bound(const std::vector<UtilityFunction>& family);

}  // namespace ustab
