#include "ppdiag/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace ppdiag {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                         "x" + std::to_string(b.cols()));
  }
}

// Appends unit vectors to `cols` (a list of orthonormal columns of length n)
// until there are `target` of them, drawing candidates from the standard basis.
void complete_orthonormal(std::vector<std::vector<double>>& cols, std::size_t n,
                          std::size_t target) {
  for (std::size_t e = 0; e < n && cols.size() < target; ++e) {
    std::vector<double> v(n, 0.0);
    v[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : cols) {
        const double c = dot(q, v);
        for (std::size_t k = 0; k < n; ++k) v[k] -= c * q[k];
      }
    }
    const double nv = norm(v);
    if (nv < 1e-6) continue;
    for (auto& x : v) x /= nv;
    cols.push_back(std::move(v));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
    : rows_(rows), cols_(cols), data_(std::move(column_major)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) { return identity(n, n); }

Matrix Matrix::identity(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matrix product: inner dimensions " + std::to_string(a.cols()) +
                         " and " + std::to_string(b.rows()) + " differ");
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto cj = c.column(j);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      auto ak = a.column(k);
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
    }
  }
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix sum");
  Matrix c = a;
  for (std::size_t k = 0; k < c.data().size(); ++k) c.data()[k] += b.data()[k];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix difference");
  Matrix c = a;
  for (std::size_t k = 0; k < c.data().size(); ++k) c.data()[k] -= b.data()[k];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (auto& x : c.data()) x *= s;
  return c;
}

Matrix cross_product(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("cross product: row counts " + std::to_string(a.rows()) + " and " +
                         std::to_string(b.rows()) + " differ");
  }
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) = dot(a.column(i), b.column(j));
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k)
    m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

double determinant(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("determinant of a non-square matrix");
  const std::size_t n = a.rows();
  if (n == 1) return a(0, 0);
  if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  Matrix m = a;
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
    if (m(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      det = -det;
    }
    det *= m(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = m(i, k) / m(k, k);
      for (std::size_t j = k; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return det;
}

Svd svd(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m < n) throw DimensionError("svd: requires rows >= cols");

  Matrix w = a;
  Matrix v = Matrix::identity(n);
  constexpr double kTol = 1e-15;
  constexpr int kMaxSweeps = 100;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        auto wi = w.column(i);
        auto wj = w.column(j);
        const double alpha = dot(wi, wi);
        const double beta = dot(wj, wj);
        const double gamma = dot(wi, wj);
        if (gamma == 0.0 || std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (std::size_t k = 0; k < m; ++k) {
          const double x = wi[k];
          const double y = wj[k];
          wi[k] = c * x - s * y;
          wj[k] = s * x + c * y;
        }
        auto vi = v.column(i);
        auto vj = v.column(j);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vi[k];
          const double y = vj[k];
          vi[k] = c * x - s * y;
          vj[k] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = norm(w.column(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });

  const double scale = sv.empty() ? 0.0 : sv[order.front()];
  const double zero_tol = std::max(1e-300, scale * 1e-14);

  std::vector<std::vector<double>> ucols;
  Svd out{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
  std::size_t rank = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.s[k] = sv[src];
    auto vs = v.column(src);
    std::copy(vs.begin(), vs.end(), out.v.column(k).begin());
    if (sv[src] > zero_tol) {
      std::vector<double> col(w.column(src).begin(), w.column(src).end());
      for (auto& x : col) x /= sv[src];
      ucols.push_back(std::move(col));
      ++rank;
    }
  }
  complete_orthonormal(ucols, m, n);
  for (std::size_t k = 0; k < n; ++k) std::copy(ucols[k].begin(), ucols[k].end(), out.u.column(k).begin());
  return out;
}

SymmetricEigen symmetric_eigen(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("symmetric_eigen: matrix is not square");
  const std::size_t n = a.rows();
  Matrix m = a;
  Matrix v = Matrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += m(i, i) * m(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    }
    if (off <= 1e-30 * std::max(diag, 1e-300)) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return m(x, x) > m(y, y); });
  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = m(order[k], order[k]);
    auto src = v.column(order[k]);
    std::copy(src.begin(), src.end(), out.vectors.column(k).begin());
  }
  return out;
}

std::string to_string(const Matrix& m) {
  std::ostringstream os;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << '[';
    for (std::size_t j = 0; j < m.cols(); ++j) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%.6g", j ? ", " : "", m(i, j));
      os << buf;
    }
    os << "]\n";
  }
  return os.str();
}

}  // namespace ppdiag
