#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gridlight/core/rng.hpp"
#include "gridlight/neural/matrix.hpp"

namespace gridlight::neural {

// Interface shared by every parameterized net: enumerate named tensors in a
// fixed order.  Optimizer steps, soft target updates, checkpoints, and the
// finite-difference harness all work through this.
class ParamOwner {
 public:
  virtual ~ParamOwner() = default;
  virtual void visit_params(
      const std::function<void(const std::string&, Matrix&)>& fn) = 0;
  virtual void visit_params(
      const std::function<void(const std::string&, const Matrix&)>& fn)
      const = 0;
  // Called after any external mutation of parameters (optimizer step,
  // soft update, checkpoint load, test perturbation) so cached transposes
  // can be rebuilt.
  virtual void params_mutated() = 0;
};

// Gradient tensors for one net, ordered exactly like its visit_params order.
struct GradBundle {
  std::vector<Matrix> tensors;
  void zero() {
    for (auto& t : tensors) t.fill(0.0);
  }
};

GradBundle make_zero_grads(const ParamOwner& net);
bool all_finite(const GradBundle& g);

struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;  // empty => one linear layer
  std::size_t output_dim = 0;
};

// Forward-pass intermediate state kept for the backward pass.
struct MlpCache {
  std::vector<Matrix> inputs;   // input to each layer
  std::vector<Matrix> outputs;  // post-activation output of each layer
};

// Fully connected net with ReLU hidden activations and a linear output.
// Callers that want a distribution apply softmax to the returned logits;
// gradients are always given with respect to the raw output.
class Mlp : public ParamOwner {
 public:
  Mlp() = default;
  // Kaiming-uniform weights (fan-in), zero biases, drawn from rng in layer
  // order.
  Mlp(MlpSpec spec, Rng& rng);

  const MlpSpec& spec() const { return spec_; }
  std::size_t layer_count() const { return w_.size(); }
  std::size_t param_count() const;

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, MlpCache& cache) const;

  // Accumulates parameter gradients for output gradient dy into grads
  // (ordered: w0, b0, w1, b1, ...).  If dx is non-null it receives the
  // gradient with respect to the input.
  void backward(const MlpCache& cache, const Matrix& dy, GradBundle& grads,
                Matrix* dx = nullptr) const;

  void visit_params(
      const std::function<void(const std::string&, Matrix&)>& fn) override;
  void visit_params(const std::function<void(const std::string&,
                                             const Matrix&)>& fn) const override;
  void params_mutated() override;

 private:
  MlpSpec spec_;
  std::vector<Matrix> w_;   // [in x out] per layer
  std::vector<Matrix> b_;   // [1 x out]
  std::vector<Matrix> wt_;  // cached transposes [out x in] for backward
};

}  // namespace gridlight::neural
