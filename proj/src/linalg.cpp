// SPDX-License-Identifier: Apache-2.0
#include "qasc/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace qasc::linalg {

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.cols) throw std::invalid_argument("matvec: size mismatch");
  std::vector<double> y(a.rows, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    double acc = 0.0;
    const double* row = a.data.data() + r * a.cols;
    for (std::size_t c = 0; c < a.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

std::vector<double> matvec_t(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.rows) throw std::invalid_argument("matvec_t: size mismatch");
  std::vector<double> y(a.cols, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double xr = x[r];
    const double* row = a.data.data() + r * a.cols;
    for (std::size_t c = 0; c < a.cols; ++c) y[c] += row[c] * xr;
  }
  return y;
}

Matrix gram(const Matrix& a) {
  Matrix g(a.rows, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = i; j < a.rows; ++j) {
      double acc = 0.0;
      const double* ri = a.data.data() + i * a.cols;
      const double* rj = a.data.data() + j * a.cols;
      for (std::size_t c = 0; c < a.cols; ++c) acc += ri[c] * rj[c];
      g.at(i, j) = acc;
      g.at(j, i) = acc;
    }
  }
  return g;
}

Matrix cholesky(Matrix a) {
  if (a.rows != a.cols) throw std::invalid_argument("cholesky: square matrix required");
  const std::size_t n = a.rows;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a.at(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
    if (d <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
    const double ljj = std::sqrt(d);
    a.at(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a.at(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
      a.at(i, j) = s / ljj;
    }
    for (std::size_t c = j + 1; c < n; ++c) a.at(j, c) = 0.0;  // keep lower triangle only
  }
  return a;
}

std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
  if (l.rows != l.cols || b.size() != l.rows)
    throw std::invalid_argument("cholesky_solve: size mismatch");
  const std::size_t n = l.rows;
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l.at(i, k) * y[k];
    y[i] = s / l.at(i, i);
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l.at(k, ii) * x[k];
    x[ii] = s / l.at(ii, ii);
  }
  return x;
}

}  // namespace qasc::linalg
