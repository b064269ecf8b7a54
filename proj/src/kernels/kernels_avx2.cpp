// AVX2+FMA kernel variants.  Bit-for-bit equivalent to the scalar reference:
// identical k-accumulation order, fused multiply-adds in the same places, and
// scalar std::fma tail loops for ragged edges.

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "gridlight/kernels/kernels.hpp"

namespace gridlight::kernels::avx2 {
namespace {

// 6x8 register-blocked panel: rows i0..i0+5, all n columns of C.
// load_a(p, r) supplies the multiplier for row r at depth p, which lets the
// same kernel serve both the NN and TN layouts.
template <typename LoadA>
inline void panel6(LoadA load_a, const double* b, double* c, std::size_t i0,
                   std::size_t k, std::size_t n) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d acc[6][2];
    for (int r = 0; r < 6; ++r) {
      acc[r][0] = _mm256_loadu_pd(c + (i0 + r) * n + j);
      acc[r][1] = _mm256_loadu_pd(c + (i0 + r) * n + j + 4);
    }
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
      const __m256d b1 = _mm256_loadu_pd(b + p * n + j + 4);
      for (int r = 0; r < 6; ++r) {
        const __m256d av = _mm256_set1_pd(load_a(p, r));
        acc[r][0] = _mm256_fmadd_pd(av, b0, acc[r][0]);
        acc[r][1] = _mm256_fmadd_pd(av, b1, acc[r][1]);
      }
    }
    for (int r = 0; r < 6; ++r) {
      _mm256_storeu_pd(c + (i0 + r) * n + j, acc[r][0]);
      _mm256_storeu_pd(c + (i0 + r) * n + j + 4, acc[r][1]);
    }
  }
  for (; j < n; ++j) {
    for (int r = 0; r < 6; ++r) {
      double acc = c[(i0 + r) * n + j];
      for (std::size_t p = 0; p < k; ++p) {
        acc = std::fma(load_a(p, r), b[p * n + j], acc);
      }
      c[(i0 + r) * n + j] = acc;
    }
  }
}

// Single-row remainder.
template <typename LoadA>
inline void panel1(LoadA load_a, const double* b, double* c, std::size_t i,
                   std::size_t k, std::size_t n) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d a0 = _mm256_loadu_pd(c + i * n + j);
    __m256d a1 = _mm256_loadu_pd(c + i * n + j + 4);
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d av = _mm256_set1_pd(load_a(p));
      a0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * n + j), a0);
      a1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * n + j + 4), a1);
    }
    _mm256_storeu_pd(c + i * n + j, a0);
    _mm256_storeu_pd(c + i * n + j + 4, a1);
  }
  for (; j < n; ++j) {
    double acc = c[i * n + j];
    for (std::size_t p = 0; p < k; ++p) {
      acc = std::fma(load_a(p), b[p * n + j], acc);
    }
    c[i * n + j] = acc;
  }
}

}  // namespace

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 6 <= m; i += 6) {
    const double* ai = a + i * k;
    panel6([&](std::size_t p, int r) { return ai[r * k + p]; }, b, c, i, k, n);
  }
  for (; i < m; ++i) {
    const double* ai = a + i * k;
    panel1([&](std::size_t p) { return ai[p]; }, b, c, i, k, n);
  }
}

void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 6 <= m; i += 6) {
    panel6([&](std::size_t p, int r) { return a[p * m + i + r]; }, b, c, i, k,
           n);
  }
  for (; i < m; ++i) {
    panel1([&](std::size_t p) { return a[p * m + i]; }, b, c, i, k, n);
  }
}

void axpby(double alpha, const double* x, double beta, double* y,
           std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, vx, _mm256_mul_pd(vb, vy)));
  }
  for (; i < n; ++i) {
    y[i] = std::fma(alpha, x[i], beta * y[i]);
  }
}

void adam_step(double* p, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vomb1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d vomb2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vbc1 = _mm256_set1_pd(bc1);
  const __m256d vbc2 = _mm256_set1_pd(bc2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi =
        _mm256_fmadd_pd(vb1, _mm256_loadu_pd(m + i), _mm256_mul_pd(vomb1, gi));
    const __m256d vi = _mm256_fmadd_pd(
        vb2, _mm256_loadu_pd(v + i), _mm256_mul_pd(vomb2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d denom =
        _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, vbc2)), veps);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(vlr, _mm256_mul_pd(mi, vbc1)), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  const double omb1 = 1.0 - beta1;
  const double omb2 = 1.0 - beta2;
  for (; i < n; ++i) {
    const double gi = g[i];
    const double mi = std::fma(beta1, m[i], omb1 * gi);
    const double vi = std::fma(beta2, v[i], omb2 * (gi * gi));
    m[i] = mi;
    v[i] = vi;
    const double denom = std::sqrt(vi * bc2) + eps;
    p[i] = p[i] - (lr * (mi * bc1)) / denom;
  }
}

void relu_forward(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(x + i, _mm256_and_pd(xv, mask));
  }
  for (; i < n; ++i) {
    x[i] = x[i] > 0.0 ? x[i] : 0.0;
  }
}

void relu_backward(const double* y, double* dy, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(y + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(dy + i, _mm256_and_pd(_mm256_loadu_pd(dy + i), mask));
  }
  for (; i < n; ++i) {
    dy[i] = y[i] > 0.0 ? dy[i] : 0.0;
  }
}

extern const Backend kBackend;
const Backend kBackend = {
    "avx2", gemm_nn, gemm_tn, axpby, adam_step, relu_forward, relu_backward,
};

}  // namespace gridlight::kernels::avx2
