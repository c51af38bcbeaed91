#pragma once

#include <memory>
#include <string>
#include <vector>

namespace ustab {

enum class UtilityFamily { kLog, kPower, kTabulated };

const char* utility_family_name(UtilityFamily f);

/// A utility on (0, inf) of the form a * base(x) + b with a > 0, where base is
///   log x, x^alpha / alpha (alpha < 1, alpha != 0), or a tabulated concave
///   function whose marginal utility is piecewise linear between grid points
///   and behaves like c / x beyond both ends (so the Inada conditions hold).
/// The piecewise-linear marginal makes the inverse marginal I = (U')^{-1}
/// exact for tabulated utilities too.
class UtilityFunction {
 public:
  static UtilityFunction log();
  static UtilityFunction power(double alpha);
  /// `x` strictly increasing and positive, `marginal` strictly decreasing and
  /// positive; `value_at_first` anchors U(x[0]).
  static UtilityFunction tabulated(std::vector<double> x, std::vector<double> marginal, double value_at_first = 0.0);
  /// Tabulates `u` by sampling its marginal utility (and value at grid[0]).
  static UtilityFunction tabulated_from(const UtilityFunction& u, const std::vector<double>& grid);

  /// a * U + b.
  UtilityFunction affine(double scale, double shift) const;
  /// (U - U(1)) / U'(1): value 0 and slope 1 at x = 1.
  UtilityFunction normalized() const;

  UtilityFamily family() const { return family_; }
  double alpha() const { return alpha_; }
  double scale() const { return scale_; }
  double shift() const { return shift_; }
  std::string describe() const;

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  /// I(y) = (U')^{-1}(y).
  double inverse_marginal(double y) const;
  /// sup_x U(x); +inf when unbounded above.
  double supremum() const;

 private:
  struct Table {
    std::vector<double> x, m, u;  // abscissae, marginals, values
    std::vector<double> slope;    // slope of the marginal on each segment
  };

  UtilityFunction() = default;

  double base_value(double x) const;
  double base_derivative(double x) const;
  double base_second(double x) const;
  double base_inverse(double m) const;

  UtilityFamily family_ = UtilityFamily::kLog;
  double alpha_ = 0.0;
  double scale_ = 1.0;
  double shift_ = 0.0;
  std::shared_ptr<const Table> table_;
};

/// V(y) = sup_{x>0} { U(x) - x y }, evaluated through V(y) = U(I(y)) - y I(y)
/// (closed forms for the builtin families).
class DualFunction {
 public:
  explicit DualFunction(UtilityFunction u) : u_(std::move(u)) {}

  const UtilityFunction& utility() const { return u_; }

  double value(double y) const;
  /// V'(y) = -I(y).
  double derivative(double y) const { return -u_.inverse_marginal(y); }
  /// V''(y) = -1 / U''(I(y)).
  double second_derivative(double y) const;
  double positive_part(double y) const;
  /// V(0+) = sup U, possibly +inf.
  double value_at_zero() const { return u_.supremum(); }

 private:
  UtilityFunction u_;
};

/// Convex conjugate of a utility in closed form (via the inverse marginal).
DualFunction conjugate(const UtilityFunction& u);

/// sup_{x>0} { U(x) - x y } by bracketing on a log grid and golden-section
/// refinement, using values of U only. Throws ConjugateDiverges when the
/// maximizer runs off the bracket [1e-12, 1e12].
double conjugate_numeric(const UtilityFunction& u, double y);

}  // namespace ustab
