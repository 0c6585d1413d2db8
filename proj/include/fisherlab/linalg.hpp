#pragma once

// Small dense linear algebra used throughout the library. Matrices are
// row-major and sized at runtime; every dimension in this project is at most
// a few dozen, so nothing here is blocked or vectorised by hand.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fisherlab {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Vector column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> values);

  Matrix transposed() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

/// Aᵀ B without forming the transpose.
Matrix transpose_times(const Matrix& a, const Matrix& b);

double max_abs(const Matrix& a);
double frobenius_norm(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
Vector add(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double s);
/// y += s * x
void axpy(double s, std::span<const double> x, std::span<double> y);
Vector normalized(std::span<const double> a);
bool all_finite(std::span<const double> a);

/// Dense symmetric matrix. Symmetry and finiteness are checked when built
/// from a general matrix; `set` writes both triangles so the invariant is
/// kept by construction afterwards.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim);

  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(std::span<const double> diag);
  static SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// Throws InvalidMatrix on non-finite entries or asymmetry beyond
  /// 1e-12 * (1 + max|A|).
  static SymMatrix from_matrix(const Matrix& m);
  /// (M + Mᵀ)/2 of a square matrix, no tolerance check.
  static SymMatrix symmetrize(const Matrix& m);

  std::size_t dim() const noexcept { return a_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return a_(i, j); }
  void set(std::size_t i, std::size_t j, double v) {
    a_(i, j) = v;
    a_(j, i) = v;
  }
  const Matrix& matrix() const noexcept { return a_; }

  /// Checks the SymMatrix invariants; throws InvalidMatrix.
  void validate() const;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  explicit SymMatrix(Matrix m) : a_(std::move(m)) {}
  Matrix a_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(SymMatrix a, double s);
SymMatrix operator*(double s, SymMatrix a);

/// Bᵀ A B, symmetrised.
SymMatrix congruence(const SymMatrix& a, const Matrix& b);

}  // namespace fisherlab
