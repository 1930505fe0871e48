#pragma once

// Small dense row-major matrix and a Cholesky solver for symmetric positive
// definite systems. Sized for decoder training (n up to a few thousand).

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spikelink/core.hpp"

namespace spikelink {

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// y = M^T x, i.e. y_k = sum_n x_n M(n, k). This is the readout direction:
// rows index neurons, columns index outputs.
inline std::vector<double> transpose_times(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.rows()) {
    throw DimensionMismatch("expected " + std::to_string(m.rows()) + " activities, got " +
                            std::to_string(x.size()));
  }
  std::vector<double> y(m.cols(), 0.0);
  for (std::size_t n = 0; n < m.rows(); ++n) {
    const double xn = x[n];
    if (xn == 0.0) continue;
    const auto r = m.row(n);
    for (std::size_t k = 0; k < r.size(); ++k) y[k] += xn * r[k];
  }
  return y;
}

// Gram matrix A^T A.
inline Matrix gram(const Matrix& a) {
  Matrix g(a.cols(), a.cols());
  for (std::size_t s = 0; s < a.rows(); ++s) {
    const auto r = a.row(s);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double ri = r[i];
      if (ri == 0.0) continue;
      auto gi = g.row(i);
      for (std::size_t j = i; j < r.size(); ++j) gi[j] += ri * r[j];
    }
  }
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

// A^T B for A (s x n), B (s x k).
inline Matrix transpose_product(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionMismatch("transpose_product: row counts differ");
  Matrix out(a.cols(), b.cols());
  for (std::size_t s = 0; s < a.rows(); ++s) {
    const auto ar = a.row(s);
    const auto br = b.row(s);
    for (std::size_t i = 0; i < ar.size(); ++i) {
      if (ar[i] == 0.0) continue;
      auto orow = out.row(i);
      for (std::size_t k = 0; k < br.size(); ++k) orow[k] += ar[i] * br[k];
    }
  }
  return out;
}

// In-place lower Cholesky factor of an SPD matrix. Throws SingularSystem when
// a pivot is not safely positive relative to the diagonal scale.
inline void cholesky_factor(Matrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionMismatch("cholesky: matrix not square");
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
  const double tiny = scale * 1e-13;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    const auto rj = a.row(j);
    for (std::size_t k = 0; k < j; ++k) d -= rj[k] * rj[k];
    if (!(d > tiny) || !std::isfinite(d)) {
      throw SingularSystem("normal matrix is numerically singular at pivot " + std::to_string(j));
    }
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      const auto ri = a.row(i);
      double s = ri[j];
      for (std::size_t k = 0; k < j; ++k) s -= ri[k] * rj[k];
      ri[j] = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = 0.0;
}

// Solves (L L^T) X = B given the lower factor L; B is overwritten with X.
inline void cholesky_solve(const Matrix& l, Matrix& b) {
  const std::size_t n = l.rows();
  if (b.rows() != n) throw DimensionMismatch("cholesky_solve: right-hand side rows differ");
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = b(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * b(k, c);
      b(i, c) = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * b(k, c);
      b(ii, c) = s / l(ii, ii);
    }
  }
}

// Minimizes ||A X - T||^2 + lambda ||X||^2 through the normal equations.
inline Matrix ridge_solve(const Matrix& a, const Matrix& targets, double lambda) {
  Matrix g = gram(a);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += lambda;
  Matrix rhs = transpose_product(a, targets);
  cholesky_factor(g);
  cholesky_solve(g, rhs);
  return rhs;
}

}  // namespace spikelink
