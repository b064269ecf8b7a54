// AVX-512 kernel variants.  Ragged column edges are handled with lane masks,
// so the per-element operation sequence stays identical to the scalar
// reference for every matrix shape.

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "gridlight/kernels/kernels.hpp"

namespace gridlight::kernels::avx512 {
namespace {

inline __mmask8 tail_mask(std::size_t remaining) {
  return remaining >= 8 ? __mmask8(0xff) : __mmask8((1u << remaining) - 1u);
}

// Rows i0..i0+5 of C, all columns, 8 columns per vector with a masked tail.
template <typename LoadA>
inline void panel6(LoadA load_a, const double* b, double* c, std::size_t i0,
                   std::size_t k, std::size_t n) {
  for (std::size_t j = 0; j < n; j += 8) {
    const __mmask8 mk = tail_mask(n - j);
    __m512d acc[6];
    for (int r = 0; r < 6; ++r) {
      acc[r] = _mm512_maskz_loadu_pd(mk, c + (i0 + r) * n + j);
    }
    for (std::size_t p = 0; p < k; ++p) {
      const __m512d bv = _mm512_maskz_loadu_pd(mk, b + p * n + j);
      for (int r = 0; r < 6; ++r) {
        acc[r] = _mm512_fmadd_pd(_mm512_set1_pd(load_a(p, r)), bv, acc[r]);
      }
    }
    for (int r = 0; r < 6; ++r) {
      _mm512_mask_storeu_pd(c + (i0 + r) * n + j, mk, acc[r]);
    }
  }
}

template <typename LoadA>
inline void panel1(LoadA load_a, const double* b, double* c, std::size_t i,
                   std::size_t k, std::size_t n) {
  for (std::size_t j = 0; j < n; j += 8) {
    const __mmask8 mk = tail_mask(n - j);
    __m512d acc = _mm512_maskz_loadu_pd(mk, c + i * n + j);
    for (std::size_t p = 0; p < k; ++p) {
      const __m512d bv = _mm512_maskz_loadu_pd(mk, b + p * n + j);
      acc = _mm512_fmadd_pd(_mm512_set1_pd(load_a(p)), bv, acc);
    }
    _mm512_mask_storeu_pd(c + i * n + j, mk, acc);
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
  const __m512d va = _mm512_set1_pd(alpha);
  const __m512d vb = _mm512_set1_pd(beta);
  for (std::size_t i = 0; i < n; i += 8) {
    const __mmask8 mk = tail_mask(n - i);
    const __m512d vy = _mm512_maskz_loadu_pd(mk, y + i);
    const __m512d vx = _mm512_maskz_loadu_pd(mk, x + i);
    _mm512_mask_storeu_pd(y + i, mk,
                          _mm512_fmadd_pd(va, vx, _mm512_mul_pd(vb, vy)));
  }
}

void adam_step(double* p, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2) {
  const __m512d vb1 = _mm512_set1_pd(beta1);
  const __m512d vb2 = _mm512_set1_pd(beta2);
  const __m512d vomb1 = _mm512_set1_pd(1.0 - beta1);
  const __m512d vomb2 = _mm512_set1_pd(1.0 - beta2);
  const __m512d veps = _mm512_set1_pd(eps);
  const __m512d vlr = _mm512_set1_pd(lr);
  const __m512d vbc1 = _mm512_set1_pd(bc1);
  const __m512d vbc2 = _mm512_set1_pd(bc2);
  for (std::size_t i = 0; i < n; i += 8) {
    const __mmask8 mk = tail_mask(n - i);
    const __m512d gi = _mm512_maskz_loadu_pd(mk, g + i);
    const __m512d mi = _mm512_fmadd_pd(vb1, _mm512_maskz_loadu_pd(mk, m + i),
                                       _mm512_mul_pd(vomb1, gi));
    const __m512d vi =
        _mm512_fmadd_pd(vb2, _mm512_maskz_loadu_pd(mk, v + i),
                        _mm512_mul_pd(vomb2, _mm512_mul_pd(gi, gi)));
    _mm512_mask_storeu_pd(m + i, mk, mi);
    _mm512_mask_storeu_pd(v + i, mk, vi);
    const __m512d denom =
        _mm512_add_pd(_mm512_sqrt_pd(_mm512_mul_pd(vi, vbc2)), veps);
    const __m512d step =
        _mm512_div_pd(_mm512_mul_pd(vlr, _mm512_mul_pd(mi, vbc1)), denom);
    _mm512_mask_storeu_pd(
        p + i, mk, _mm512_sub_pd(_mm512_maskz_loadu_pd(mk, p + i), step));
  }
}

void relu_forward(double* x, std::size_t n) {
  const __m512d zero = _mm512_setzero_pd();
  for (std::size_t i = 0; i < n; i += 8) {
    const __mmask8 mk = tail_mask(n - i);
    const __m512d xv = _mm512_maskz_loadu_pd(mk, x + i);
    const __mmask8 pos = _mm512_cmp_pd_mask(xv, zero, _CMP_GT_OQ);
    _mm512_mask_storeu_pd(x + i, mk, _mm512_maskz_mov_pd(pos, xv));
  }
}

void relu_backward(const double* y, double* dy, std::size_t n) {
  const __m512d zero = _mm512_setzero_pd();
  for (std::size_t i = 0; i < n; i += 8) {
    const __mmask8 mk = tail_mask(n - i);
    const __m512d yv = _mm512_maskz_loadu_pd(mk, y + i);
    const __mmask8 pos = _mm512_cmp_pd_mask(yv, zero, _CMP_GT_OQ);
    const __m512d dv = _mm512_maskz_loadu_pd(mk, dy + i);
    _mm512_mask_storeu_pd(dy + i, mk, _mm512_maskz_mov_pd(pos, dv));
  }
}

extern const Backend kBackend;
const Backend kBackend = {
    "avx512", gemm_nn, gemm_tn, axpby, adam_step, relu_forward, relu_backward,
};

}  // namespace gridlight::kernels::avx512
