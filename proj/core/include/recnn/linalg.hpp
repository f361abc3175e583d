#pragma once

#include <cstddef>
#include <vector>

namespace recnn {

/// Small dense row-major matrix for band statistics (B x B).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows(rows), cols(cols), data(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  Matrix transposed() const;
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

Matrix operator*(const Matrix& a, const Matrix& b);

struct EigenSystem {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i pairs with values[i]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below 1e-12 (relative to the norm of A when A is large).
EigenSystem jacobi_eigh(const Matrix& a);

/// Lower-triangular L with A = L Lᵀ, or nothing when A is not positive
/// definite.
bool cholesky(const Matrix& a, Matrix& lower);

/// Solves L X = B for lower-triangular L.
Matrix solve_lower(const Matrix& lower, const Matrix& b);
/// Solves Lᵀ X = B for lower-triangular L.
Matrix solve_lower_transposed(const Matrix& lower, const Matrix& b);

}  // namespace recnn
