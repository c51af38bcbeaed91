#include "ustab/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ustab/error.hpp"

namespace ustab {

const char* utility_family_name(UtilityFamily f) {
  switch (f) {
    case UtilityFamily::kLog: return "log";
    case UtilityFamily::kPower: return "power";
    case UtilityFamily::kTabulated: return "tabulated";
  }
  return "unknown";
}

UtilityFunction UtilityFunction::log() { return UtilityFunction(); }

UtilityFunction UtilityFunction::power(double alpha) {
  if (!(alpha < 1.0) || alpha == 0.0 || !std::isfinite(alpha))
    throw Error(ErrorCode::kInvalidSpec, "power utility needs alpha < 1 and alpha != 0");
  UtilityFunction u;
  u.family_ = UtilityFamily::kPower;
  u.alpha_ = alpha;
  return u;
}

UtilityFunction UtilityFunction::tabulated(std::vector<double> x, std::vector<double> marginal, double value_at_first) {
  if (x.size() < 2 || x.size() != marginal.size())
    throw Error(ErrorCode::kInvalidSpec, "tabulated utility needs at least two (x, marginal) pairs");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(marginal[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(marginal[i]))
      throw Error(ErrorCode::kInvalidSpec, "tabulated utility needs positive finite abscissae and marginals");
    if (i > 0 && !(x[i] > x[i - 1]))
      throw Error(ErrorCode::kInvalidSpec, "tabulated abscissae must increase strictly");
    if (i > 0 && !(marginal[i] < marginal[i - 1]))
      throw Error(ErrorCode::kInvalidSpec, "tabulated marginal utility must decrease strictly");
  }
  auto t = std::make_shared<Table>();
  t->x = std::move(x);
  t->m = std::move(marginal);
  t->u.assign(t->x.size(), value_at_first);
  t->slope.assign(t->x.size() - 1, 0.0);
  for (std::size_t i = 0; i + 1 < t->x.size(); ++i) {
    const double h = t->x[i + 1] - t->x[i];
    t->slope[i] = (t->m[i + 1] - t->m[i]) / h;
    t->u[i + 1] = t->u[i] + 0.5 * (t->m[i] + t->m[i + 1]) * h;
  }
  UtilityFunction u;
  u.family_ = UtilityFamily::kTabulated;
  u.table_ = std::move(t);
  return u;
}

UtilityFunction UtilityFunction::tabulated_from(const UtilityFunction& u, const std::vector<double>& grid) {
  std::vector<double> m;
  m.reserve(grid.size());
  for (double x : grid) m.push_back(u.derivative(x));
  return tabulated(grid, std::move(m), grid.empty() ? 0.0 : u.value(grid.front()));
}

UtilityFunction UtilityFunction::affine(double scale, double shift) const {
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(shift))
    throw Error(ErrorCode::kInvalidSpec, "utility rescaling needs a positive finite factor");
  UtilityFunction u = *this;
  u.scale_ = scale_ * scale;
  u.shift_ = shift_ * scale + shift;
  return u;
}

UtilityFunction UtilityFunction::normalized() const {
  const double slope = derivative(1.0);
  return affine(1.0 / slope, -value(1.0) / slope);
}

std::string UtilityFunction::describe() const {
  std::ostringstream os;
  os << utility_family_name(family_);
  if (family_ == UtilityFamily::kPower) os << "(alpha=" << alpha_ << ")";
  if (family_ == UtilityFamily::kTabulated) os << "(" << table_->x.size() << " points)";
  if (scale_ != 1.0 || shift_ != 0.0) os << " * " << scale_ << " + " << shift_;
  return os.str();
}

double UtilityFunction::base_value(double x) const {
  switch (family_) {
    case UtilityFamily::kLog: return std::log(x);
    case UtilityFamily::kPower: return std::pow(x, alpha_) / alpha_;
    case UtilityFamily::kTabulated: {
      const auto& t = *table_;
      if (x <= t.x.front()) return t.u.front() + t.m.front() * t.x.front() * std::log(x / t.x.front());
      if (x >= t.x.back()) return t.u.back() + t.m.back() * t.x.back() * std::log(x / t.x.back());
      const auto i = static_cast<std::size_t>(std::upper_bound(t.x.begin(), t.x.end(), x) - t.x.begin()) - 1;
      const double d = x - t.x[i];
      return t.u[i] + t.m[i] * d + 0.5 * t.slope[i] * d * d;
    }
  }
  return 0.0;
}

double UtilityFunction::base_derivative(double x) const {
  switch (family_) {
    case UtilityFamily::kLog: return 1.0 / x;
    case UtilityFamily::kPower: return std::pow(x, alpha_ - 1.0);
    case UtilityFamily::kTabulated: {
      const auto& t = *table_;
      if (x <= t.x.front()) return t.m.front() * t.x.front() / x;
      if (x >= t.x.back()) return t.m.back() * t.x.back() / x;
      const auto i = static_cast<std::size_t>(std::upper_bound(t.x.begin(), t.x.end(), x) - t.x.begin()) - 1;
      return t.m[i] + t.slope[i] * (x - t.x[i]);
    }
  }
  return 0.0;
}

double UtilityFunction::base_second(double x) const {
  switch (family_) {
    case UtilityFamily::kLog: return -1.0 / (x * x);
    case UtilityFamily::kPower: return (alpha_ - 1.0) * std::pow(x, alpha_ - 2.0);
    case UtilityFamily::kTabulated: {
      const auto& t = *table_;
      if (x < t.x.front()) return -t.m.front() * t.x.front() / (x * x);
      if (x >= t.x.back()) return -t.m.back() * t.x.back() / (x * x);
      const auto i = static_cast<std::size_t>(std::upper_bound(t.x.begin(), t.x.end(), x) - t.x.begin()) - 1;
      return t.slope[i];
    }
  }
  return 0.0;
}

double UtilityFunction::base_inverse(double m) const {
  switch (family_) {
    case UtilityFamily::kLog: return 1.0 / m;
    case UtilityFamily::kPower: return std::pow(m, 1.0 / (alpha_ - 1.0));
    case UtilityFamily::kTabulated: {
      const auto& t = *table_;
      if (m >= t.m.front()) return t.m.front() * t.x.front() / m;
      if (m <= t.m.back()) return t.m.back() * t.x.back() / m;
      // marginals decrease: find the segment with m[i] > m >= m[i+1]
      const auto it = std::lower_bound(t.m.begin(), t.m.end(), m, [](double a, double b) { return a > b; });
      const auto i = static_cast<std::size_t>(it - t.m.begin()) - 1;
      return t.x[i] + (m - t.m[i]) / t.slope[i];
    }
  }
  return 0.0;
}

double UtilityFunction::value(double x) const { return scale_ * base_value(x) + shift_; }
double UtilityFunction::derivative(double x) const { return scale_ * base_derivative(x); }
double UtilityFunction::second_derivative(double x) const { return scale_ * base_second(x); }
double UtilityFunction::inverse_marginal(double y) const { return base_inverse(y / scale_); }

double UtilityFunction::supremum() const {
  if (family_ == UtilityFamily::kPower && alpha_ < 0.0) return shift_;
  return std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------

double DualFunction::value(double y) const {
  const double a = u_.scale(), b = u_.shift();
  switch (u_.family()) {
    case UtilityFamily::kLog: return -a * std::log(y / a) - a + b;
    case UtilityFamily::kPower: {
      const double al = u_.alpha();
      return a * ((1.0 - al) / al) * std::pow(y / a, -al / (1.0 - al)) + b;
    }
    case UtilityFamily::kTabulated: {
      const double x = u_.inverse_marginal(y);
      return u_.value(x) - x * y;
    }
  }
  return 0.0;
}

double DualFunction::second_derivative(double y) const {
  return -1.0 / u_.second_derivative(u_.inverse_marginal(y));
}

double DualFunction::positive_part(double y) const { return std::max(0.0, value(y)); }

DualFunction conjugate(const UtilityFunction& u) { return DualFunction(u); }

double conjugate_numeric(const UtilityFunction& u, double y) {
  if (!(y > 0.0)) throw Error(ErrorCode::kInvalidSpec, "conjugate needs y > 0");
  const double lo = std::log(1e-12), hi = std::log(1e12);
  constexpr int kGrid = 480;
  auto f = [&](double t) {
    const double x = std::exp(t);
    return u.value(x) - x * y;
  };
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  const double step = (hi - lo) / kGrid;
  for (int i = 0; i <= kGrid; ++i) {
    const double v = f(lo + step * i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == 0 || best == kGrid)
    throw Error(ErrorCode::kConjugateDiverges, "sup of U(x) - x y is not attained inside [1e-12, 1e12]");

  // golden-section refinement on the bracketing cell pair
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo + step * (best - 1), b = lo + step * (best + 1);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::max({best_val, fc, fd, f(0.5 * (a + b))});
}

}  // namespace ustab
