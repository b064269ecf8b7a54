#include "gridlight/algo/mixing.hpp"

#include <cassert>
#include <cmath>

namespace gridlight::algo {

namespace {
double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }
double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
}  // namespace

double mix_forward(std::span<const double> q, std::span<const double> w1_raw,
                   std::span<const double> b1, std::span<const double> w2_raw,
                   double b2, MixTape* tape) {
  const std::size_t n = q.size();
  const std::size_t hdim = b1.size();
  assert(w1_raw.size() == n * hdim && w2_raw.size() == hdim);
  std::vector<double> z1(hdim), h(hdim);
  double out = b2;
  for (std::size_t j = 0; j < hdim; ++j) {
    double z = b1[j];
    for (std::size_t a = 0; a < n; ++a) z += q[a] * std::fabs(w1_raw[a * hdim + j]);
    z1[j] = z;
    h[j] = elu(z);
    out += h[j] * std::fabs(w2_raw[j]);
  }
  if (tape != nullptr) {
    tape->q.assign(q.begin(), q.end());
    tape->w1.assign(w1_raw.begin(), w1_raw.end());
    tape->b1.assign(b1.begin(), b1.end());
    tape->w2.assign(w2_raw.begin(), w2_raw.end());
    tape->b2 = b2;
    tape->z1 = std::move(z1);
    tape->h = std::move(h);
    tape->out = out;
  }
  return out;
}

void mix_backward(const MixTape& tape, double dout, std::span<double> dq,
                  std::span<double> dw1_raw, std::span<double> db1,
                  std::span<double> dw2_raw, double& db2) {
  const std::size_t n = tape.q.size();
  const std::size_t hdim = tape.b1.size();
  assert(dq.size() == n && dw1_raw.size() == n * hdim && db1.size() == hdim &&
         dw2_raw.size() == hdim);
  db2 = dout;
  for (std::size_t a = 0; a < n; ++a) dq[a] = 0.0;
  for (std::size_t j = 0; j < hdim; ++j) {
    dw2_raw[j] = sgn(tape.w2[j]) * tape.h[j] * dout;
    const double dz = std::fabs(tape.w2[j]) * dout * elu_grad(tape.z1[j]);
    db1[j] = dz;
    for (std::size_t a = 0; a < n; ++a) {
      const double w = tape.w1[a * hdim + j];
      dw1_raw[a * hdim + j] = sgn(w) * tape.q[a] * dz;
      dq[a] += std::fabs(w) * dz;
    }
  }
}

}  // namespace gridlight::algo
