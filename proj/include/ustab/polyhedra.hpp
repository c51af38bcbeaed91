#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace ustab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Indices of a maximal set of linearly independent rows of `a`.
std::vector<Eigen::Index> independent_rows(const Matrix& a, double tol = 1e-10);

/// Orthonormal basis (columns) of the null space of `a`.
Matrix null_space(const Matrix& a, double tol = 1e-10);

/// Extreme points of {z >= 0 : a z = b}, found by trying every square basis of
/// the row-reduced system. Results are ordered by the lexicographic order of
/// the basis that produced them and deduplicated at `tol`. Throws if the
/// number of candidate bases is beyond desk scale.
std::vector<Vector> enumerate_vertices(const Matrix& a, const Vector& b, double tol = 1e-10);

/// Point of conv(points) closest to the origin (exact, by subset enumeration).
Vector min_norm_point(const std::vector<Vector>& points);

/// Euclidean distance from `p` to conv(points).
double distance_to_hull(const Vector& p, const std::vector<Vector>& points);

/// A closed convex polytope in R^n held as generators together with a facet
/// description inside its affine hull. Dimensions up to ~4 with a few dozen
/// generators are the intended scale.
class HullPolytope {
 public:
  HullPolytope() = default;
  explicit HullPolytope(std::vector<Vector> generators, double tol = 1e-10);

  std::size_t ambient_dim() const { return ambient_dim_; }
  /// Dimension of the affine hull (0 for a single point).
  int affine_dim() const { return static_cast<int>(basis_.cols()); }
  bool empty() const { return generators_.empty(); }

  const std::vector<Vector>& generators() const { return generators_; }
  /// Extreme points among the generators.
  const std::vector<Vector>& vertices() const { return vertices_; }

  /// Signed distance from `p` to the relative boundary (positive inside).
  /// Returns -inf when `p` is off the affine hull by more than `tol`.
  double relative_depth(const Vector& p) const;

  /// True iff `p` lies in the relative interior with at least `margin` of room.
  /// A single point is its own relative interior (matched within `margin`).
  bool in_relative_interior(const Vector& p, double margin) const;

  /// True iff `p` lies in the closed polytope within `tol`.
  bool contains(const Vector& p, double tol) const;

  /// True iff the polytope has nonempty interior in R^n (full dimension).
  bool full_dimensional() const { return affine_dim() == static_cast<int>(ambient_dim_); }

  /// max over generators of <d, g>.
  double support(const Vector& d) const;

 private:
  struct Facet {
    Vector normal;  // unit, in reduced coordinates
    double offset;  // normal . z <= offset
  };

  Vector reduce(const Vector& p) const;

  std::size_t ambient_dim_ = 0;
  double tol_ = 1e-10;
  std::vector<Vector> generators_;
  std::vector<Vector> vertices_;
  Vector center_;
  Matrix basis_;  // ambient_dim x affine_dim, orthonormal columns
  std::vector<Facet> facets_;
};

}  // namespace ustab
