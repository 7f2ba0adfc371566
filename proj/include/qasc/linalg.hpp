// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qasc::linalg {

// Row-major dense matrix. Everything in this project is small (at most a few
// thousand entries), so plain loops beat any BLAS dispatch overhead and keep
// results bit-reproducible.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }
};

// y = A x  (len(x) == cols, len(y) == rows)
std::vector<double> matvec(const Matrix& a, std::span<const double> x);

// y = A^T x  (len(x) == rows, len(y) == cols)
std::vector<double> matvec_t(const Matrix& a, std::span<const double> x);

// C = A B^T restricted to what the mel pseudo-inverse needs: G = A A^T.
Matrix gram(const Matrix& a);

// Cholesky factorization of a symmetric positive-definite matrix, in place.
// Throws std::runtime_error if the matrix is not positive definite.
Matrix cholesky(Matrix a);

// Solves L L^T x = b given the lower-triangular factor from cholesky().
std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b);

}  // namespace qasc::linalg
