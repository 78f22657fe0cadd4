#include "edsgd/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "edsgd/error.hpp"

namespace edsgd {

Matrix Matrix::identity(std::size_t order) {
  Matrix m(order);
  for (std::size_t i = 0; i < order; ++i)
    m(i, i) = 1.0;
  return m;
}

Matrix Matrix::averaging(std::size_t order) {
  return Matrix(order, order == 0 ? 0.0 : 1.0 / static_cast<double>(order));
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i)
    m(i, i) = diag[i];
  return m;
}

Matrix &Matrix::operator+=(const Matrix &other) {
  if (other.order_ != order_)
    throw NumericError("matrix order mismatch in +=");
  for (std::size_t k = 0; k < data_.size(); ++k)
    data_[k] += other.data_[k];
  return *this;
}

Matrix &Matrix::operator-=(const Matrix &other) {
  if (other.order_ != order_)
    throw NumericError("matrix order mismatch in -=");
  for (std::size_t k = 0; k < data_.size(); ++k)
    data_[k] -= other.data_[k];
  return *this;
}

Matrix &Matrix::operator*=(double s) {
  for (double &v : data_)
    v *= s;
  return *this;
}

Matrix operator*(const Matrix &a, const Matrix &b) {
  if (a.order_ != b.order_)
    throw NumericError("matrix order mismatch in product");
  const std::size_t n = a.order_;
  Matrix c(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0)
        continue;
      for (std::size_t j = 0; j < n; ++j)
        c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Matrix Matrix::transposed() const {
  Matrix t(order_);
  for (std::size_t i = 0; i < order_; ++i)
    for (std::size_t j = 0; j < order_; ++j)
      t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < order_; ++i)
    t += (*this)(i, i);
  return t;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_)
    s += v * v;
  return std::sqrt(s);
}

double Matrix::asymmetry() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < order_; ++i)
    for (std::size_t j = i + 1; j < order_; ++j)
      worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
  return worst;
}

double Matrix::max_abs_row_sum() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < order_; ++i) {
    double s = 0.0;
    for (double v : row(i))
      s += v;
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

double Matrix::max_abs_diff(const Matrix &other) const {
  if (other.order_ != order_)
    throw NumericError("matrix order mismatch in comparison");
  double worst = 0.0;
  for (std::size_t k = 0; k < data_.size(); ++k)
    worst = std::max(worst, std::abs(data_[k] - other.data_[k]));
  return worst;
}

std::vector<double> Matrix::multiply(std::span<const double> x) const {
  if (x.size() != order_)
    throw NumericError("vector length does not match matrix order");
  std::vector<double> y(order_, 0.0);
  for (std::size_t i = 0; i < order_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < order_; ++j)
      s += (*this)(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

namespace {

double off_diagonal_norm(const Matrix &a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.order(); ++i)
    for (std::size_t j = 0; j < a.order(); ++j)
      if (i != j)
        s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Zeroes a(p,q) with a two-sided rotation, updating only the rows/columns
// touched by the rotation.
void rotate(Matrix &a, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  if (apq == 0.0)
    return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const double tau = s / (1.0 + c);

  a(p, p) -= t * apq;
  a(q, q) += t * apq;
  a(p, q) = a(q, p) = 0.0;
  for (std::size_t r = 0; r < a.order(); ++r) {
    if (r == p || r == q)
      continue;
    const double arp = a(r, p);
    const double arq = a(r, q);
    a(r, p) = a(p, r) = arp - s * (arq + tau * arp);
    a(r, q) = a(q, r) = arq + s * (arp - tau * arq);
  }
}

} // namespace

std::vector<double> symmetric_eigenvalues(const Matrix &m, double symmetry_tol) {
  const std::size_t n = m.order();
  const double scale = std::max(1.0, m.frobenius_norm());
  if (m.asymmetry() > symmetry_tol * scale)
    throw NumericError("symmetric_eigenvalues: input is not symmetric");

  // Work on the symmetrised copy so rounding asymmetry cannot leak in.
  Matrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a(i, j) = 0.5 * (m(i, j) + m(j, i));

  const double stop = 1e-12 * scale;
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_diagonal_norm(a) >= stop; ++sweep)
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q)
        rotate(a, p, q);

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i)
    eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

} // namespace edsgd
