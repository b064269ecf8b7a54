#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gridlight::neural {

// Dense row-major f64 matrix.  Biases and vectors are 1 x n matrices so that
// parameter handling (Adam, checkpoints, soft updates) sees a single type.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), d_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return d_.size(); }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }

  double& operator()(std::size_t r, std::size_t c) { return d_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return d_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return std::span<double>(d_.data() + r * cols_, cols_);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(d_.data() + r * cols_, cols_);
  }

  void fill(double v) { d_.assign(d_.size(), v); }
  void resize(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    d_.assign(rows * cols, 0.0);
  }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> d_;
};

// c = a * b, or c += a * b when accumulate is set.  Shapes checked.
void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);

// c = a^T * b (a interpreted as [k x m] storage), or += with accumulate.
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);

// y.row(r) += bias for every row; bias is 1 x cols.
void add_row_bias(Matrix& y, const Matrix& bias);

// out = column sums of m as a 1 x cols matrix (accumulating).
void add_col_sums(const Matrix& m, Matrix& out);

// In-place row softmax (max-shifted, deterministic summation order).
void softmax_rows(Matrix& m);

// log(sum(exp(row))) per row, max-shifted.
std::vector<double> log_sum_exp_rows(const Matrix& m);

bool all_finite(const Matrix& m);

}  // namespace gridlight::neural
