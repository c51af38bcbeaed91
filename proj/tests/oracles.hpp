#pragma once

// Independent reference computations used by the unit and acceptance tests.
// They share no code with the solvers beyond plain Eigen types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// max sum_i p_i U(g_i) over g >= 0 with qv.col(k) . g <= b(k) for every k,
/// by exhaustive search over faces: for every nonempty set S of budgets taken
/// with equality, a zooming grid search runs in coordinates of the affine set
/// {qv_S^T g = b_S}; infeasible grid points are discarded. The optimum lies in
/// the relative interior of some face (U is increasing, so some budget binds),
/// where the restricted objective is smooth and the zoom cannot stall on a
/// ridge.
inline double brute_force_primal(const Eigen::MatrixXd& qv, const Eigen::VectorXd& b, const Eigen::VectorXd& p,
                                 const std::function<double(double)>& u) {
  const auto n = qv.rows(), kv = qv.cols();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double gmax = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double cap = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < kv; ++k)
      if (qv(i, k) > 0.0) cap = std::min(cap, b(k) / qv(i, k));
    gmax = std::max(gmax, cap);
  }
  auto value = [&](const Eigen::VectorXd& g) {
    if (g.minCoeff() <= 0.0) return kNegInf;
    for (Eigen::Index k = 0; k < kv; ++k)
      if (qv.col(k).dot(g) > b(k) * (1.0 + 1e-13) + 1e-13) return kNegInf;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += p(i) * u(g(i));
    return s;
  };

  double best = kNegInf;
  for (unsigned mask = 1; mask < (1u << kv); ++mask) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index k = 0; k < kv; ++k)
      if (mask & (1u << k)) rows.push_back(k);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), n);
    Eigen::VectorXd rhs(a.rows());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      a.row(r) = qv.col(rows[static_cast<std::size_t>(r)]).transpose();
      rhs(r) = b(rows[static_cast<std::size_t>(r)]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-10);
    const Eigen::VectorXd g0 = svd.solve(rhs);
    if ((a * g0 - rhs).cwiseAbs().maxCoeff() > 1e-10) continue;
    const auto rank = svd.rank();
    const Eigen::MatrixXd basis = svd.matrixV().rightCols(n - rank);
    const auto d = basis.cols();
    if (d == 0) {
      best = std::max(best, value(g0));
      continue;
    }
    const int cells = d >= 3 ? 20 : (d == 2 ? 60 : 400);
    const double radius = std::sqrt(static_cast<double>(n)) * gmax + g0.norm();
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, -radius), hi = Eigen::VectorXd::Constant(d, radius);
    double face_best = kNegInf;
    Eigen::VectorXd arg = Eigen::VectorXd::Zero(d);
    for (int round = 0; round < 200; ++round) {
      const Eigen::VectorXd step = (hi - lo) / cells;
      std::vector<int> idx(static_cast<std::size_t>(d), 0);
      while (true) {
        Eigen::VectorXd t(d);
        for (Eigen::Index j = 0; j < d; ++j) t(j) = lo(j) + step(j) * idx[static_cast<std::size_t>(j)];
        const double val = value(g0 + basis * t);
        if (val > face_best) {
          face_best = val;
          arg = t;
        }
        Eigen::Index j = 0;
        for (; j < d; ++j) {
          if (++idx[static_cast<std::size_t>(j)] <= cells) break;
          idx[static_cast<std::size_t>(j)] = 0;
        }
        if (j == d) break;
      }
      if (face_best == kNegInf || step.maxCoeff() < 1e-12) break;
      lo = (arg.array() - 0.25 * cells * step.array()).matrix();
      hi = (arg.array() + 0.25 * cells * step.array()).matrix();
    }
    best = std::max(best, face_best);
  }
  return best;
}

/// Zooming grid search for the minimum of f over a box (2 dimensions);
/// infeasible points return +inf.
inline Eigen::Vector2d zoom_argmin_2d(const std::function<double(double, double)>& f, Eigen::Vector2d lo,
                                      Eigen::Vector2d hi, int cells = 40, int rounds = 25) {
  Eigen::Vector2d arg = 0.5 * (lo + hi);
  double best = std::numeric_limits<double>::infinity();
  for (int round = 0; round < rounds; ++round) {
    const Eigen::Vector2d step = (hi - lo) / cells;
    for (int i = 0; i <= cells; ++i)
      for (int k = 0; k <= cells; ++k) {
        const double a = lo(0) + step(0) * i, c = lo(1) + step(1) * k;
        const double val = f(a, c);
        if (val < best) {
          best = val;
          arg = {a, c};
        }
      }
    lo = (arg - 3.0 * step).cwiseMax(lo);
    hi = (arg + 3.0 * step).cwiseMin(hi);
  }
  return arg;
}

}  // namespace oracle
