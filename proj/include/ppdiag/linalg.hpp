#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppdiag {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense real matrix, column-major storage.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> column_major);

  static Matrix identity(std::size_t n);
  // First `cols` columns of the rows x rows identity.
  static Matrix identity(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> column(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> column(std::size_t j) const {
    return {data_.data() + j * rows_, rows_};
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Matrix transpose() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

// aᵀ·b without forming the transpose.
Matrix cross_product(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Determinant by Gaussian elimination with partial pivoting.
double determinant(const Matrix& a);

struct Svd {
  Matrix u;                // rows x cols, orthonormal columns
  std::vector<double> s;   // descending, non-negative
  Matrix v;                // cols x cols, orthogonal
};

// Thin SVD by one-sided (Hestenes) Jacobi rotations. Requires rows >= cols.
// Columns of u belonging to zero singular values are completed to an
// orthonormal set.
Svd svd(const Matrix& a);

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // columns are eigenvectors
};

// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
SymmetricEigen symmetric_eigen(const Matrix& a);

std::string to_string(const Matrix& m);

}  // namespace ppdiag
