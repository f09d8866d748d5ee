// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrices of doubles. Every higher layer (grids, attention,
// reuse engine) stores Q, K, V and attention maps in this type.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace streuse {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
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

// Accumulates k in ascending order for every (i, j), so results are
// reproducible bit-for-bit.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// Numerically stable softmax over each row (max subtraction).
Matrix row_softmax(const Matrix& a);

Matrix scale(const Matrix& a, double s);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);

double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);

}  // namespace streuse
