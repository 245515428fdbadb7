#include "graphst/matrix.hpp"

#include <Eigen/Core>
#include <cmath>

#include "graphst/errors.hpp"

namespace graphst {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ShapeError("negative matrix dimension");
  values_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, double fill) : Matrix(rows, cols) {
  values_.assign(values_.size(), fill);
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  Matrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw ShapeError("ragged initializer rows");
    int j = 0;
    for (double v : row) m.at(i, j++) = v;
    ++i;
  }
  return m;
}

bool Matrix::all_finite() const {
  // Branchless: x * 0 is NaN exactly when x is NaN or infinite.
  double acc = 0.0;
  for (double v : values_) acc += v * 0.0;
  return acc == 0.0;
}

double Matrix::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) out.at(j, i) = at(i, j);
  return out;
}

using EigenMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using EigenMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Matrix matmul_value(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions disagree");
  Matrix out(a.rows(), b.cols());
  if (out.size() == 0 || a.cols() == 0) return out;
  EigenMap ma(a.data(), a.rows(), a.cols());
  EigenMap mb(b.data(), b.rows(), b.cols());
  EigenMutMap mo(out.data(), out.rows(), out.cols());
  mo.noalias() = ma * mb;
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner dimensions disagree");
  Matrix out(a.rows(), b.rows());
  if (out.size() == 0 || a.cols() == 0) return out;
  EigenMap ma(a.data(), a.rows(), a.cols());
  EigenMap mb(b.data(), b.rows(), b.cols());
  EigenMutMap mo(out.data(), out.rows(), out.cols());
  mo.noalias() = ma * mb.transpose();
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: inner dimensions disagree");
  Matrix out(a.cols(), b.cols());
  if (out.size() == 0 || a.rows() == 0) return out;
  EigenMap ma(a.data(), a.rows(), a.cols());
  EigenMap mb(b.data(), b.rows(), b.cols());
  EigenMutMap mo(out.data(), out.rows(), out.cols());
  mo.noalias() = ma.transpose() * mb;
  return out;
}

}  // namespace graphst
