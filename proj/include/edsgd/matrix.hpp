#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace edsgd {

/// Dense square matrix, row-major. Sized for desk-scale graphs (n <= 512).
class Matrix {
public:
  Matrix() = default;
  explicit Matrix(std::size_t order, double fill = 0.0)
      : order_(order), data_(order * order, fill) {}

  static Matrix identity(std::size_t order);
  /// J = 11^T / n.
  static Matrix averaging(std::size_t order);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t order() const { return order_; }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * order_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * order_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * order_, order_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * order_, order_};
  }
  std::span<const double> data() const { return data_; }

  Matrix &operator+=(const Matrix &other);
  Matrix &operator-=(const Matrix &other);
  Matrix &operator*=(double s);

  friend Matrix operator+(Matrix a, const Matrix &b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix &b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator*(const Matrix &a, const Matrix &b);
  friend bool operator==(const Matrix &a, const Matrix &b) = default;

  Matrix transposed() const;
  double trace() const;
  double frobenius_norm() const;
  /// Largest |a_ij - a_ji|.
  double asymmetry() const;
  /// Largest |row sum|.
  double max_abs_row_sum() const;
  double max_abs_diff(const Matrix &other) const;

  std::vector<double> multiply(std::span<const double> x) const;

private:
  std::size_t order_ = 0;
  std::vector<double> data_;
};

/// All eigenvalues of a symmetric matrix in ascending order, by cyclic Jacobi
/// rotations. Throws NumericError when |M - M^T| exceeds `symmetry_tol`.
std::vector<double> symmetric_eigenvalues(const Matrix &m, double symmetry_tol = 1e-9);

} // namespace edsgd
