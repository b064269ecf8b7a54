#include "gridlight/neural/matrix.hpp"

#include <cmath>
#include <stdexcept>

#include "gridlight/kernels/kernels.hpp"

namespace gridlight::neural {

void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dims");
  if (c.rows() != a.rows() || c.cols() != b.cols()) {
    throw std::invalid_argument("matmul: output shape");
  }
  if (!accumulate) c.fill(0.0);
  kernels::backend().gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(),
                             b.cols());
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: inner dims");
  if (c.rows() != a.cols() || c.cols() != b.cols()) {
    throw std::invalid_argument("matmul_tn: output shape");
  }
  if (!accumulate) c.fill(0.0);
  kernels::backend().gemm_tn(a.data(), b.data(), c.data(), a.cols(), a.rows(),
                             b.cols());
}

void add_row_bias(Matrix& y, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != y.cols()) {
    throw std::invalid_argument("add_row_bias: bias shape");
  }
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double* yr = y.data() + r * y.cols();
    for (std::size_t c = 0; c < y.cols(); ++c) yr[c] += bias(0, c);
  }
}

void add_col_sums(const Matrix& m, Matrix& out) {
  if (out.rows() != 1 || out.cols() != m.cols()) {
    throw std::invalid_argument("add_col_sums: output shape");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* mr = m.data() + r * m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) out(0, c) += mr[c];
  }
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double* row = m.data() + r * m.cols();
    double mx = row[0];
    for (std::size_t c = 1; c < m.cols(); ++c) mx = row[c] > mx ? row[c] : mx;
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] /= sum;
  }
}

std::vector<double> log_sum_exp_rows(const Matrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.data() + r * m.cols();
    double mx = row[0];
    for (std::size_t c = 1; c < m.cols(); ++c) mx = row[c] > mx ? row[c] : mx;
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) sum += std::exp(row[c] - mx);
    out[r] = mx + std::log(sum);
  }
  return out;
}

bool all_finite(const Matrix& m) {
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

}  // namespace gridlight::neural
