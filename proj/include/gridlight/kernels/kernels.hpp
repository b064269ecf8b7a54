#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gridlight::kernels {

// Dense double-precision kernels used by the neural nets and optimizers.
// Every kernel has a scalar reference implementation plus AVX2 and AVX-512
// variants selected at runtime.  All variants are bit-for-bit equivalent:
// they accumulate in the same order and use fused multiply-add everywhere
// (the scalar reference goes through std::fma), so switching backends never
// changes a result.

struct Backend {
  const char* name;

  // c[m x n] += a[m x k] * b[k x n]; all matrices row-major, may not alias.
  void (*gemm_nn)(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n);

  // c[m x n] += a^T * b where a is stored [k x m]; used for dW = X^T dY.
  void (*gemm_tn)(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n);

  // y[i] = fma(alpha, x[i], beta * y[i]); covers soft target updates.
  void (*axpby)(double alpha, const double* x, double beta, double* y,
                std::size_t n);

  // One Adam update over n parameters.  m/v are the running moments,
  // bc1/bc2 the precomputed bias corrections 1/(1-beta1^t), 1/(1-beta2^t).
  void (*adam_step)(double* p, double* m, double* v, const double* g,
                    std::size_t n, double lr, double beta1, double beta2,
                    double eps, double bc1, double bc2);

  // In-place x = max(x, 0).
  void (*relu_forward)(double* x, std::size_t n);

  // dy[i] = y[i] > 0 ? dy[i] : 0, where y is the forward output.
  void (*relu_backward)(const double* y, double* dy, std::size_t n);
};

// Currently selected backend.  On first use this picks the widest variant
// the CPU supports, unless the GRIDLIGHT_KERNELS environment variable or a
// prior select() call pinned one explicitly.
const Backend& backend();

// Force a specific backend ("scalar", "avx2", "avx512").  Throws
// std::invalid_argument for unknown names and std::runtime_error if the CPU
// lacks the instruction set.
void select(const std::string& name);

// Names of the variants this CPU can run, widest last.
std::vector<std::string> available();

}  // namespace gridlight::kernels
