#include "ppdiag/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ppdiag {

namespace {

void require_same_shape(const Basis& a, const Basis& b, const char* what) {
  if (a.p() != b.p() || a.d() != b.d()) {
    throw DimensionError(std::string(what) + ": bases are " + std::to_string(a.p()) + "x" +
                         std::to_string(a.d()) + " and " + std::to_string(b.p()) + "x" +
                         std::to_string(b.d()));
  }
}

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

// Unit vector orthogonal to the first `used` columns of `frame` and to every
// column of `other`.
std::vector<double> complement_direction(const Matrix& frame, std::size_t used,
                                         const Matrix& other) {
  const std::size_t p = frame.rows();
  for (std::size_t e = 0; e < p; ++e) {
    std::vector<double> v(p, 0.0);
    v[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < other.cols(); ++j) {
        const double c = dot(other.column(j), v);
        for (std::size_t k = 0; k < p; ++k) v[k] -= c * other(k, j);
      }
      for (std::size_t j = 0; j < used; ++j) {
        const double c = dot(frame.column(j), v);
        for (std::size_t k = 0; k < p; ++k) v[k] -= c * frame(k, j);
      }
    }
    const double nv = norm(v);
    if (nv > 1e-6) {
      for (auto& x : v) x /= nv;
      return v;
    }
  }
  throw DegenerateInputError("geodesic: no orthogonal complement direction (d too large for p)");
}

Matrix rotation2(double angle) {
  Matrix r(2, 2);
  r(0, 0) = std::cos(angle);
  r(1, 0) = std::sin(angle);
  r(0, 1) = -std::sin(angle);
  r(1, 1) = std::cos(angle);
  return r;
}

}  // namespace

Basis Basis::from_orthonormal(Matrix m) {
  if (m.cols() < 1 || m.cols() >= m.rows()) {
    throw DimensionError("basis must satisfy 1 <= d < p, got " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()));
  }
  for (double x : m.data())
    if (!std::isfinite(x)) throw DegenerateInputError("basis has non-finite entries");
  const double err = orthonormality_error(m);
  if (err > kOrthonormalTol) {
    throw DegenerateInputError("matrix columns are not orthonormal (error " +
                               std::to_string(err) + ")");
  }
  return Basis(std::move(m));
}

Basis Basis::axes(std::size_t p, std::vector<std::size_t> columns) {
  Matrix m(p, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] >= p) throw DimensionError("axis index out of range");
    m(columns[j], j) = 1.0;
  }
  return from_orthonormal(std::move(m));
}

Basis Basis::negated() const { return Basis(-1.0 * m_); }

Basis Basis::with_column_negated(std::size_t j) const {
  Matrix m = m_;
  for (auto& x : m.column(j)) x = -x;
  return Basis(std::move(m));
}

double orthonormality_error(const Matrix& a) {
  const Matrix g = cross_product(a, a);
  double err = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      err = std::max(err, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return err;
}

Basis orthonormalize(const Matrix& m) {
  if (m.cols() < 1 || m.cols() >= m.rows()) {
    throw DimensionError("orthonormalize: need 1 <= d < p, got " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()));
  }
  Matrix q = m;
  for (std::size_t k = 0; k < q.cols(); ++k) {
    auto v = q.column(k);
    for (double x : v)
      if (!std::isfinite(x)) throw DegenerateInputError("orthonormalize: non-finite entry");
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < k; ++i) {
        auto qi = q.column(i);
        const double c = dot(qi, v);
        for (std::size_t r = 0; r < v.size(); ++r) v[r] -= c * qi[r];
      }
    }
    const double nv = norm(v);
    if (nv < kRankTol) {
      throw DegenerateInputError("orthonormalize: column " + std::to_string(k + 1) +
                                 " is linearly dependent (residual " + std::to_string(nv) + ")");
    }
    for (auto& x : v) x /= nv;
  }
  return Basis(std::move(q));
}

std::vector<double> principal_angles(const Basis& a, const Basis& b) {
  require_same_shape(a, b, "principal_angles");
  const Svd s = svd(cross_product(a.matrix(), b.matrix()));
  std::vector<double> angles(s.s.size());
  for (std::size_t i = 0; i < angles.size(); ++i) angles[i] = std::acos(clamp_unit(s.s[i]));
  return angles;
}

double geodesic_distance(const Basis& a, const Basis& b) {
  double sum = 0.0;
  for (double theta : principal_angles(a, b)) sum += theta * theta;
  return std::sqrt(sum);
}

double alignment_determinant(const Basis& current, const Basis& target) {
  require_same_shape(current, target, "alignment_determinant");
  return determinant(cross_product(current.matrix(), target.matrix()));
}

Basis orient_match(const Basis& current, const Basis& target) {
  if (alignment_determinant(current, target) < 0.0) return target.with_column_negated(0);
  return target;
}

Basis random_basis(std::size_t p, std::size_t d, Rng& rng) {
  for (;;) {
    Matrix m(p, d);
    for (auto& x : m.data()) x = rng.normal();
    try {
      return orthonormalize(m);
    } catch (const DegenerateInputError&) {
      // probability zero; draw again
    }
  }
}

Basis linear_blend(const Basis& current, const Basis& random, double alpha) {
  require_same_shape(current, random, "linear_blend");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("linear_blend: alpha outside [0, 1]");
  if (alpha == 0.0) return current;
  return orthonormalize((1.0 - alpha) * current.matrix() + alpha * random.matrix());
}

Geodesic::Geodesic(const Basis& from, const Basis& to) : from_(from), to_(to) {
  require_same_shape(from, to, "geodesic");
  const std::size_t p = from.p();
  const std::size_t d = from.d();

  Svd s = svd(cross_product(from.matrix(), to.matrix()));
  // Keep U·Vᵀ a proper rotation so the in-span part of the path is continuous.
  // When that needs a sign change, the last singular value turns negative and
  // its principal angle exceeds pi/2.
  if (determinant(s.u) * determinant(s.v) < 0.0) {
    for (auto& x : s.v.column(d - 1)) x = -x;
    s.s[d - 1] = -s.s[d - 1];
  }

  start_frame_ = from.matrix() * s.u;
  const Matrix end_frame = to.matrix() * s.v;
  normal_frame_ = Matrix(p, d);
  angles_.resize(d);
  double sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    angles_[i] = std::acos(clamp_unit(s.s[i]));
    sq += angles_[i] * angles_[i];
    std::vector<double> h(end_frame.column(i).begin(), end_frame.column(i).end());
    for (std::size_t k = 0; k < p; ++k) h[k] -= s.s[i] * start_frame_(k, i);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < d; ++j) {
        const double c = dot(start_frame_.column(j), h);
        for (std::size_t k = 0; k < p; ++k) h[k] -= c * start_frame_(k, j);
      }
      for (std::size_t j = 0; j < i; ++j) {
        const double c = dot(normal_frame_.column(j), h);
        for (std::size_t k = 0; k < p; ++k) h[k] -= c * normal_frame_(k, j);
      }
    }
    const double nh = norm(h);
    if (nh > kRankTol) {
      for (auto& x : h) x /= nh;
    } else if (s.s[i] > 0.0) {
      // Zero angle: the direction never moves, so it needs no normal.
      std::fill(h.begin(), h.end(), 0.0);
    } else {
      h = complement_direction(normal_frame_, i, start_frame_);
    }
    std::copy(h.begin(), h.end(), normal_frame_.column(i).begin());
  }
  length_ = std::sqrt(sq);
  u_transpose_ = s.u.transpose();
  in_span_rotation_ = s.u * s.v.transpose();
  if (d == 2) in_span_angle_ = std::atan2(in_span_rotation_(1, 0), in_span_rotation_(0, 0));
}

Basis Geodesic::at(double t) const {
  if (t == 0.0) return from_;
  if (t == 1.0) return to_;
  const std::size_t p = from_.p();
  const std::size_t d = from_.d();

  Matrix g(p, d);
  for (std::size_t i = 0; i < d; ++i) {
    const double c = std::cos(t * angles_[i]);
    const double s = std::sin(t * angles_[i]);
    for (std::size_t k = 0; k < p; ++k) g(k, i) = c * start_frame_(k, i) + s * normal_frame_(k, i);
  }

  Matrix q;
  if (d == 1) {
    q = Matrix::identity(1);
  } else if (d == 2) {
    q = rotation2(t * in_span_angle_);
  } else {
    const double tc = std::clamp(t, 0.0, 1.0);
    const Matrix blend = (1.0 - tc) * Matrix::identity(d) + tc * in_span_rotation_;
    Matrix padded(d + 1, d);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < d; ++i) padded(i, j) = blend(i, j);
    const Basis qb = orthonormalize(padded);
    q = Matrix(d, d);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < d; ++i) q(i, j) = qb(i, j);
  }
  return orthonormalize(g * (u_transpose_ * q));
}

Basis Geodesic::at_angle(double angle) const {
  if (length_ == 0.0) return from_;
  return at(angle / length_);
}

GeodesicPath geodesic_path(const Basis& from, const Basis& to, double step_angle) {
  if (!(step_angle > 0.0)) throw std::invalid_argument("geodesic_path: step_angle must be positive");
  GeodesicPath path{from, to, step_angle, {}};
  const Geodesic geo(from, to);
  if (geo.length() < kRankTol) {
    path.frames.push_back(from);
    return path;
  }
  // Small slack keeps exact multiples of the step from gaining a frame.
  const auto steps =
      static_cast<std::size_t>(std::ceil(geo.length() / step_angle - 1e-9));
  const std::size_t n = std::max<std::size_t>(steps, 1) + 1;
  path.frames.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k + 1 == n) {
      path.frames.push_back(to);
    } else {
      path.frames.push_back(geo.at(static_cast<double>(k) / static_cast<double>(n - 1)));
    }
  }
  return path;
}

}  // namespace ppdiag
