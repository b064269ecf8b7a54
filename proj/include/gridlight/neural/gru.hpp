#pragma once

#include <vector>

#include "gridlight/core/rng.hpp"
#include "gridlight/neural/mlp.hpp"

namespace gridlight::neural {

struct GruSpec {
  std::size_t input_dim = 0;
  std::size_t encoder_dim = 64;  // linear+ReLU encoder ahead of the cell
  std::size_t hidden_dim = 64;
  std::size_t output_dim = 0;
};

// State cached by one forward step, consumed by the matching backward step.
struct GruStepCache {
  Matrix x, e, h_in, z, r, rh, c, h_out;
};

// Recurrent value head: linear+ReLU encoder -> GRU cell -> linear readout.
// h' = (1-z) (.) h + z (.) cand,  z/r sigmoid gates, cand tanh.
class GruNet : public ParamOwner {
 public:
  GruNet() = default;
  GruNet(GruSpec spec, Rng& rng);

  const GruSpec& spec() const { return spec_; }
  std::size_t param_count() const;

  Matrix initial_state(std::size_t batch) const {
    return Matrix(batch, spec_.hidden_dim);
  }

  // x: [B x in], h: [B x hidden].  Returns y [B x out] and writes the new
  // hidden state to h_out (may alias h).
  Matrix step(const Matrix& x, const Matrix& h, Matrix& h_out) const;
  Matrix step(const Matrix& x, const Matrix& h, Matrix& h_out,
              GruStepCache& cache) const;

  // dy: output gradient for this step; dh_next: gradient flowing into h_out
  // from later steps (zero matrix for the last step).  Accumulates parameter
  // gradients and writes the gradient w.r.t. h_in to dh_prev.
  void backward_step(const GruStepCache& cache, const Matrix& dy,
                     const Matrix& dh_next, GradBundle& grads,
                     Matrix& dh_prev) const;

  void visit_params(
      const std::function<void(const std::string&, Matrix&)>& fn) override;
  void visit_params(const std::function<void(const std::string&,
                                             const Matrix&)>& fn) const override;
  void params_mutated() override;

 private:
  GruSpec spec_;
  Matrix w_enc_, b_enc_;
  Matrix w_z_, u_z_, b_z_;
  Matrix w_r_, u_r_, b_r_;
  Matrix w_h_, u_h_, b_h_;
  Matrix w_out_, b_out_;
  // Cached transposes for the backward pass.
  Matrix wt_z_, wt_r_, wt_h_, ut_z_, ut_r_, ut_h_, wt_out_;
};

}  // namespace gridlight::neural
