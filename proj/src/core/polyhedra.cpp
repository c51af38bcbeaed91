#include "ustab/polyhedra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ustab/error.hpp"

namespace ustab {

namespace {

constexpr double kMaxBases = 5.0e6;

double binomial(Eigen::Index n, Eigen::Index k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (Eigen::Index i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Advances `idx` to the next k-combination of {0..n-1}; false when exhausted.
bool next_combination(std::vector<Eigen::Index>& idx, Eigen::Index n) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  for (Eigen::Index i = k - 1; i >= 0; --i) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (Eigen::Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

bool near(const Vector& a, const Vector& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

std::vector<Eigen::Index> independent_rows(const Matrix& a, double tol) {
  if (a.rows() == 0 || a.cols() == 0) return {};
  Eigen::ColPivHouseholderQR<Matrix> qr(a.transpose());
  qr.setThreshold(tol);
  const auto rank = qr.rank();
  std::vector<Eigen::Index> rows;
  rows.reserve(static_cast<std::size_t>(rank));
  for (Eigen::Index i = 0; i < rank; ++i) rows.push_back(qr.colsPermutation().indices()(i));
  std::sort(rows.begin(), rows.end());
  return rows;
}

Matrix null_space(const Matrix& a, double tol) {
  const auto n = a.cols();
  if (a.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cutoff = tol * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

std::vector<Vector> enumerate_vertices(const Matrix& a, const Vector& b, double tol) {
  const auto n = a.cols();
  std::vector<Vector> out;
  const auto rows = independent_rows(a, tol);
  const auto r = static_cast<Eigen::Index>(rows.size());
  const double scale = 1.0 + (b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0);

  if (r == 0) {
    if (b.size() == 0 || b.cwiseAbs().maxCoeff() <= tol) out.push_back(Vector::Zero(n));
    return out;
  }
  if (binomial(n, r) > kMaxBases)
    throw Error(ErrorCode::kInvalidSpec, "polytope too large for exhaustive basis enumeration");

  Matrix ar(r, n);
  Vector br(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    ar.row(i) = a.row(rows[static_cast<std::size_t>(i)]);
    br(i) = b(rows[static_cast<std::size_t>(i)]);
  }

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(r));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Matrix basis(r, r);
  do {
    for (Eigen::Index j = 0; j < r; ++j) basis.col(j) = ar.col(idx[static_cast<std::size_t>(j)]);
    Eigen::FullPivLU<Matrix> lu(basis);
    lu.setThreshold(tol);
    if (lu.rank() < r) continue;
    const Vector zb = lu.solve(br);
    if (zb.minCoeff() < -tol * scale) continue;
    Vector z = Vector::Zero(n);
    for (Eigen::Index j = 0; j < r; ++j) z(idx[static_cast<std::size_t>(j)]) = std::max(0.0, zb(j));
    if ((a * z - b).cwiseAbs().maxCoeff() > tol * scale * 10.0) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Vector& v) { return near(v, z, tol * scale * 10.0); });
    if (!dup) out.push_back(std::move(z));
  } while (next_combination(idx, n));
  return out;
}

Vector min_norm_point(const std::vector<Vector>& points) {
  if (points.empty()) throw Error(ErrorCode::kEmptySet, "min_norm_point of an empty set");
  const auto d = points.front().size();
  const auto m = static_cast<Eigen::Index>(points.size());
  const Eigen::Index max_k = std::min<Eigen::Index>(m, d + 1);

  Vector best = points.front();
  double best_norm = best.norm();
  for (const auto& p : points) {
    if (p.norm() < best_norm) {
      best = p;
      best_norm = p.norm();
    }
  }
  for (Eigen::Index k = 2; k <= max_k; ++k) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    do {
      // Minimize |sum mu_i p_i| subject to sum mu_i = 1 (KKT system).
      Matrix kkt = Matrix::Zero(k + 1, k + 1);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j)
          kkt(i, j) = points[static_cast<std::size_t>(idx[i])].dot(points[static_cast<std::size_t>(idx[j])]);
        kkt(i, k) = 1.0;
        kkt(k, i) = 1.0;
      }
      Vector rhs = Vector::Zero(k + 1);
      rhs(k) = 1.0;
      Eigen::FullPivLU<Matrix> lu(kkt);
      if (!lu.isInvertible()) continue;
      const Vector sol = lu.solve(rhs);
      if (sol.head(k).minCoeff() < -1e-12) continue;
      Vector p = Vector::Zero(d);
      for (Eigen::Index i = 0; i < k; ++i) p += sol(i) * points[static_cast<std::size_t>(idx[i])];
      if (p.norm() < best_norm) {
        best_norm = p.norm();
        best = p;
      }
    } while (next_combination(idx, m));
  }
  return best;
}

double distance_to_hull(const Vector& p, const std::vector<Vector>& points) {
  std::vector<Vector> shifted;
  shifted.reserve(points.size());
  for (const auto& g : points) shifted.push_back(g - p);
  return min_norm_point(shifted).norm();
}

HullPolytope::HullPolytope(std::vector<Vector> generators, double tol) : tol_(tol) {
  if (generators.empty()) return;
  ambient_dim_ = static_cast<std::size_t>(generators.front().size());
  for (const auto& g : generators) {
    const bool dup = std::any_of(generators_.begin(), generators_.end(), [&](const Vector& v) { return near(v, g, tol); });
    if (!dup) generators_.push_back(g);
  }

  const auto n = static_cast<Eigen::Index>(ambient_dim_);
  const auto m = static_cast<Eigen::Index>(generators_.size());
  center_ = Vector::Zero(n);
  for (const auto& g : generators_) center_ += g;
  center_ /= static_cast<double>(m);

  if (n == 0) {
    basis_ = Matrix::Zero(0, 0);
    vertices_ = generators_;
    return;
  }
  Matrix centered(n, m);
  for (Eigen::Index j = 0; j < m; ++j) centered.col(j) = generators_[static_cast<std::size_t>(j)] - center_;
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * (1.0 + center_.cwiseAbs().maxCoeff())) ++k;
  basis_ = svd.matrixU().leftCols(k);

  if (k == 0) {
    vertices_ = {generators_.front()};
    return;
  }

  std::vector<Vector> z;
  z.reserve(generators_.size());
  double scale = 1.0;
  for (const auto& g : generators_) {
    z.push_back(reduce(g));
    scale = std::max(scale, z.back().cwiseAbs().maxCoeff());
  }
  const double ftol = tol * scale * 10.0;

  auto add_facet = [&](Vector normal, double offset) {
    for (const auto& f : facets_)
      if (near(f.normal, normal, 1e-9) && std::abs(f.offset - offset) <= ftol) return;
    facets_.push_back({std::move(normal), offset});
  };

  if (k == 1) {
    double lo = z.front()(0), hi = lo;
    for (const auto& zi : z) {
      lo = std::min(lo, zi(0));
      hi = std::max(hi, zi(0));
    }
    add_facet(Vector::Constant(1, 1.0), hi);
    add_facet(Vector::Constant(1, -1.0), -lo);
  } else {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    if (m >= k) {
      do {
        Matrix diffs(k - 1, k);
        for (Eigen::Index i = 1; i < k; ++i)
          diffs.row(i - 1) = (z[static_cast<std::size_t>(idx[i])] - z[static_cast<std::size_t>(idx[0])]).transpose();
        const Matrix ns = null_space(diffs, 1e-9);
        if (ns.cols() != 1) continue;
        Vector normal = ns.col(0).normalized();
        double offset = normal.dot(z[static_cast<std::size_t>(idx[0])]);
        bool below = true, above = true;
        for (const auto& zi : z) {
          const double s_i = normal.dot(zi) - offset;
          if (s_i > ftol) below = false;
          if (s_i < -ftol) above = false;
        }
        if (!below && !above) continue;
        if (!below) {
          normal = -normal;
          offset = -offset;
        }
        add_facet(std::move(normal), offset);
      } while (next_combination(idx, m));
    }
  }

  for (std::size_t g = 0; g < generators_.size(); ++g) {
    std::vector<Vector> active;
    for (const auto& f : facets_)
      if (std::abs(f.offset - f.normal.dot(z[g])) <= ftol) active.push_back(f.normal);
    if (active.empty()) continue;
    Matrix normals(static_cast<Eigen::Index>(active.size()), k);
    for (std::size_t i = 0; i < active.size(); ++i) normals.row(static_cast<Eigen::Index>(i)) = active[i].transpose();
    Eigen::FullPivLU<Matrix> lu(normals);
    lu.setThreshold(1e-9);
    if (lu.rank() == k) vertices_.push_back(generators_[g]);
  }
}

Vector HullPolytope::reduce(const Vector& p) const { return basis_.transpose() * (p - center_); }

double HullPolytope::relative_depth(const Vector& p) const {
  if (generators_.empty()) return -std::numeric_limits<double>::infinity();
  const double scale = 1.0 + (center_.size() > 0 ? center_.cwiseAbs().maxCoeff() : 0.0);
  const Vector off = (p - center_) - basis_ * reduce(p);
  if (off.size() > 0 && off.norm() > tol_ * scale * 10.0) return -std::numeric_limits<double>::infinity();
  if (affine_dim() == 0) return 0.0;
  const Vector z = reduce(p);
  double depth = std::numeric_limits<double>::infinity();
  for (const auto& f : facets_) depth = std::min(depth, f.offset - f.normal.dot(z));
  return depth;
}

bool HullPolytope::in_relative_interior(const Vector& p, double margin) const {
  if (generators_.empty()) return false;
  if (affine_dim() == 0) return (p - center_).norm() <= margin;
  return relative_depth(p) > margin;
}

bool HullPolytope::contains(const Vector& p, double tol) const {
  if (generators_.empty()) return false;
  if (affine_dim() == 0) return (p - center_).norm() <= tol;
  const Vector off = (p - center_) - basis_ * reduce(p);
  if (off.norm() > tol) return false;
  return relative_depth(p) >= -tol;
}

double HullPolytope::support(const Vector& d) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& g : generators_) best = std::max(best, d.dot(g));
  return best;
}

}  // namespace ustab
