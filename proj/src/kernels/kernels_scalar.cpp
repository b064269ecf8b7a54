// Scalar reference kernels.  These define the numerical contract: every SIMD
// variant must reproduce them bit for bit.  To make that possible the scalar
// code uses std::fma wherever the vector code uses a fused multiply-add, and
// keeps the k-accumulation order identical (k innermost, sequential).

#include <cmath>
#include <cstddef>

#include "gridlight/kernels/kernels.hpp"

namespace gridlight::kernels::scalar {

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = ci[j];
      for (std::size_t p = 0; p < k; ++p) {
        acc = std::fma(ai[p], b[p * n + j], acc);
      }
      ci[j] = acc;
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  // a is stored [k x m]; c[i][j] += sum_p a[p][i] * b[p][j].
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = ci[j];
      for (std::size_t p = 0; p < k; ++p) {
        acc = std::fma(a[p * m + i], b[p * n + j], acc);
      }
      ci[j] = acc;
    }
  }
}

void axpby(double alpha, const double* x, double beta, double* y,
           std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::fma(alpha, x[i], beta * y[i]);
  }
}

void adam_step(double* p, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2) {
  const double one_minus_b1 = 1.0 - beta1;
  const double one_minus_b2 = 1.0 - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    const double mi = std::fma(beta1, m[i], one_minus_b1 * gi);
    const double vi = std::fma(beta2, v[i], one_minus_b2 * (gi * gi));
    m[i] = mi;
    v[i] = vi;
    const double denom = std::sqrt(vi * bc2) + eps;
    p[i] = p[i] - (lr * (mi * bc1)) / denom;
  }
}

void relu_forward(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = x[i] > 0.0 ? x[i] : 0.0;
  }
}

void relu_backward(const double* y, double* dy, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dy[i] = y[i] > 0.0 ? dy[i] : 0.0;
  }
}

extern const Backend kBackend;
const Backend kBackend = {
    "scalar", gemm_nn, gemm_tn, axpby, adam_step, relu_forward, relu_backward,
};

}  // namespace gridlight::kernels::scalar
