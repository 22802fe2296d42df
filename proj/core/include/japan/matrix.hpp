#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace japan {

// Dense row-major matrix of 64-bit floats.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  std::span<const double> row_span(std::size_t i) const { return {row(i), cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v) { data_.assign(data_.size(), v); }
  bool all_finite() const;

  // Reverses the column order of every row in place.
  void reverse_columns();

  Matrix transposed() const;

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// a (m×k) · b (k×n)
Matrix matmul(const Matrix& a, const Matrix& b);
// a (m×k) · bᵀ, b given as (n×k)
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// aᵀ · b, a given as (k×m), b as (k×n)
Matrix matmul_tn(const Matrix& a, const Matrix& b);

// Extracts the given rows into a new matrix.
Matrix take_rows(const Matrix& m, std::span<const std::size_t> idx);

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
// Returns false when the matrix is not positive definite.
bool cholesky(const Matrix& a, Matrix& lower);

// Solves A x = b given the Cholesky factor of A.
std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b);

}  // namespace japan
