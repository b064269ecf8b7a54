#pragma once

#include <span>
#include <vector>

namespace gridlight::algo {

inline constexpr int kMixHidden = 32;

// State-conditioned monotone mixing of per-agent utilities.  Weight heads
// produce raw values; the mixer applies |.| to them, so the mixed value is
// non-decreasing in every utility and the per-agent greedy joint action is
// also jointly greedy.
//
//   z1[j] = sum_a q[a] * |w1[a*H+j]| + b1[j]
//   out   = sum_j elu(z1[j]) * |w2[j]| + b2

// Intermediates captured by mix_forward for the backward pass.
struct MixTape {
  std::vector<double> q, w1, b1, w2;  // inputs (w1/w2 raw, pre-|.|)
  double b2 = 0.0;
  std::vector<double> z1, h;
  double out = 0.0;
};

double mix_forward(std::span<const double> q, std::span<const double> w1_raw,
                   std::span<const double> b1, std::span<const double> w2_raw,
                   double b2, MixTape* tape = nullptr);

// Writes the gradients of `dout * out` with respect to every input.  Output
// spans must match the forward shapes; db2 is overwritten like the rest.
void mix_backward(const MixTape& tape, double dout, std::span<double> dq,
                  std::span<double> dw1_raw, std::span<double> db1,
                  std::span<double> dw2_raw, double& db2);

}  // namespace gridlight::algo
