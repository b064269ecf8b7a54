#pragma once

#include <cstdint>
#include <vector>

#include "gridlight/neural/mlp.hpp"

namespace gridlight::neural {

// Adam with bias correction.  One instance per net; step() must always see
// the same tensor layout (it allocates moments on first use).
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one update to the net's parameters from the bundle (which must
  // be ordered like the net's visit_params).  Callers are expected to have
  // checked all_finite(grads) first; this throws on shape mismatch only.
  void step(ParamOwner& net, const GradBundle& grads);

  double lr() const { return lr_; }
  std::uint64_t steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

// target = tau * online + (1 - tau) * target, tensor by tensor.
void soft_update(ParamOwner& target, const ParamOwner& online, double tau);

void copy_params(ParamOwner& dst, const ParamOwner& src);

// FNV-1a over all parameter bytes in visit order; used to prove code paths
// leave parameters untouched.
std::uint64_t params_digest(const ParamOwner& net);

// Flat views for the finite-difference harness.
std::vector<double> flatten_params(const ParamOwner& net);
void unflatten_params(ParamOwner& net, const std::vector<double>& flat);
std::vector<double> flatten_grads(const GradBundle& g);

}  // namespace gridlight::neural
