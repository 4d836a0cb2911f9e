#pragma once

#include <cstddef>
#include <vector>

#include "ppdiag/linalg.hpp"
#include "ppdiag/rng.hpp"

namespace ppdiag {

inline constexpr double kOrthonormalTol = 1e-8;
inline constexpr double kRankTol = 1e-12;
inline constexpr double kDefaultStepAngle = 0.05;

// A p x d matrix with orthonormal columns (a point on the Stiefel manifold).
class Basis {
 public:
  Basis() = default;

  // Wraps a matrix that is already column-orthonormal; throws if it is not
  // (within kOrthonormalTol) or if the shape or entries are invalid.
  static Basis from_orthonormal(Matrix m);

  // Columns of the p x p identity picked by index.
  static Basis axes(std::size_t p, std::vector<std::size_t> columns);

  std::size_t p() const { return m_.rows(); }
  std::size_t d() const { return m_.cols(); }
  const Matrix& matrix() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  // Column-major flattening, length p*d.
  const std::vector<double>& flat() const { return m_.data(); }

  Basis negated() const;
  Basis with_column_negated(std::size_t j) const;

  friend bool operator==(const Basis&, const Basis&) = default;

 private:
  explicit Basis(Matrix m) : m_(std::move(m)) {}
  friend Basis orthonormalize(const Matrix& m);
  friend class Geodesic;

  Matrix m_;
};

// max |AᵀA - I| over all entries.
double orthonormality_error(const Matrix& a);

// Modified Gram-Schmidt with one re-orthogonalization pass. Column order is
// preserved. Throws DegenerateInputError when a residual norm drops below
// kRankTol.
Basis orthonormalize(const Matrix& m);

// sqrt(sum θᵢ²) over the principal angles between the column spans.
double geodesic_distance(const Basis& a, const Basis& b);

// Principal angles, ascending.
std::vector<double> principal_angles(const Basis& a, const Basis& b);

// Negates the first column of `target` when det(currentᵀ·target) < 0.
Basis orient_match(const Basis& current, const Basis& target);

double alignment_determinant(const Basis& current, const Basis& target);

// Haar-distributed random basis: orthonormalized i.i.d. standard normals.
Basis random_basis(std::size_t p, std::size_t d, Rng& rng);

// orthonormalize((1 - alpha)·current + alpha·random). Throws
// DegenerateInputError when the blend is rank deficient.
Basis linear_blend(const Basis& current, const Basis& random, double alpha);

// Constant-speed path between two bases. Each column of the principal frame
// of `from` rotates toward the matching principal direction of `to` in its own
// plane; a within-span rotation carries the frame orientation from `from` to
// `to`. Parameter t = 0 is `from`, t = 1 is `to`; values outside [0, 1]
// extrapolate along the same great circles.
class Geodesic {
 public:
  Geodesic(const Basis& from, const Basis& to);

  const Basis& from() const { return from_; }
  const Basis& to() const { return to_; }

  // Angular length of the path. Equals geodesic_distance(from, to) when
  // det(fromᵀ·to) >= 0; otherwise the path takes the long way round in the
  // last principal plane.
  double length() const { return length_; }

  Basis at(double t) const;
  // Frame at signed angular offset `angle` from `from`.
  Basis at_angle(double angle) const;

 private:
  Basis from_;
  Basis to_;
  Matrix start_frame_;         // from·U
  Matrix normal_frame_;        // unit directions orthogonal to start_frame_
  std::vector<double> angles_;
  Matrix u_transpose_;         // d x d
  Matrix in_span_rotation_;    // U·Vᵀ, d x d, det +1
  double in_span_angle_ = 0.0; // d == 2 only
  double length_ = 0.0;
};

struct GeodesicPath {
  Basis from;
  Basis to;
  double step_angle = kDefaultStepAngle;
  std::vector<Basis> frames;
};

// ceil(length / step_angle) + 1 equally spaced frames; a single frame when
// the bases span the same space.
GeodesicPath geodesic_path(const Basis& from, const Basis& to,
                           double step_angle = kDefaultStepAngle);

}  // namespace ppdiag
