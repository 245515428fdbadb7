#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace graphst {

// Dense fp64 matrix, row-major. Plain value type; no view semantics.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);               // zero-filled
  Matrix(int rows, int cols, double fill);

  static Matrix identity(int n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& at(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  double sum() const;
  double max_abs() const;
  Matrix transposed() const;

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && values_ == other.values_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

// Value-level kernels shared by the tape and by plain numeric code.
Matrix matmul_value(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b

}  // namespace graphst
