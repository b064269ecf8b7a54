#include "gridlight/neural/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "gridlight/kernels/kernels.hpp"

namespace gridlight::neural {

GradBundle make_zero_grads(const ParamOwner& net) {
  GradBundle g;
  net.visit_params([&](const std::string&, const Matrix& m) {
    g.tensors.emplace_back(m.rows(), m.cols());
  });
  return g;
}

bool all_finite(const GradBundle& g) {
  for (const auto& t : g.tensors) {
    if (!all_finite(t)) return false;
  }
  return true;
}

namespace {

void init_kaiming(Matrix& w, Rng& rng) {
  // fan-in uniform: limit = sqrt(6 / fan_in), rows are the input dimension.
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows()));
  double* p = w.data();
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = rng.uniform(-limit, limit);
}

}  // namespace

Mlp::Mlp(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
  if (spec_.input_dim == 0 || spec_.output_dim == 0) {
    throw std::invalid_argument("Mlp: zero input or output dimension");
  }
  std::vector<std::size_t> dims;
  dims.push_back(spec_.input_dim);
  for (std::size_t h : spec_.hidden) dims.push_back(h);
  dims.push_back(spec_.output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix w(dims[l], dims[l + 1]);
    init_kaiming(w, rng);
    w_.push_back(std::move(w));
    b_.emplace_back(1, dims[l + 1]);
  }
  params_mutated();
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) n += w_[l].size() + b_[l].size();
  return n;
}

Matrix Mlp::forward(const Matrix& x) const {
  Matrix h = x;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Matrix z(h.rows(), w_[l].cols());
    matmul(h, w_[l], z, false);
    add_row_bias(z, b_[l]);
    if (l + 1 < w_.size()) {
      kernels::backend().relu_forward(z.data(), z.size());
    }
    h = std::move(z);
  }
  return h;
}

Matrix Mlp::forward(const Matrix& x, MlpCache& cache) const {
  cache.inputs.clear();
  cache.outputs.clear();
  Matrix h = x;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    cache.inputs.push_back(h);
    Matrix z(h.rows(), w_[l].cols());
    matmul(h, w_[l], z, false);
    add_row_bias(z, b_[l]);
    if (l + 1 < w_.size()) {
      kernels::backend().relu_forward(z.data(), z.size());
    }
    cache.outputs.push_back(z);
    h = std::move(z);
  }
  return h;
}

void Mlp::backward(const MlpCache& cache, const Matrix& dy, GradBundle& grads,
                   Matrix* dx) const {
  if (grads.tensors.size() != 2 * w_.size()) {
    throw std::invalid_argument("Mlp::backward: grad bundle shape");
  }
  Matrix dz = dy;
  for (std::size_t li = w_.size(); li-- > 0;) {
    matmul_tn(cache.inputs[li], dz, grads.tensors[2 * li], true);
    add_col_sums(dz, grads.tensors[2 * li + 1]);
    if (li > 0) {
      Matrix dxl(dz.rows(), w_[li].rows());
      matmul(dz, wt_[li], dxl, false);
      // Backprop through the ReLU that produced this layer's input.
      kernels::backend().relu_backward(cache.outputs[li - 1].data(),
                                       dxl.data(), dxl.size());
      dz = std::move(dxl);
    } else if (dx != nullptr) {
      dx->resize(dz.rows(), w_[0].rows());
      matmul(dz, wt_[0], *dx, false);
    }
  }
}

void Mlp::visit_params(
    const std::function<void(const std::string&, Matrix&)>& fn) {
  for (std::size_t l = 0; l < w_.size(); ++l) {
    const std::string tag = "layer" + std::to_string(l);
    fn(tag + "/w", w_[l]);
    fn(tag + "/b", b_[l]);
  }
}

void Mlp::visit_params(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
  for (std::size_t l = 0; l < w_.size(); ++l) {
    const std::string tag = "layer" + std::to_string(l);
    fn(tag + "/w", w_[l]);
    fn(tag + "/b", b_[l]);
  }
}

void Mlp::params_mutated() {
  wt_.resize(w_.size());
  for (std::size_t l = 0; l < w_.size(); ++l) {
    wt_[l].resize(w_[l].cols(), w_[l].rows());
    for (std::size_t i = 0; i < w_[l].rows(); ++i) {
      for (std::size_t j = 0; j < w_[l].cols(); ++j) {
        wt_[l](j, i) = w_[l](i, j);
      }
    }
  }
}

}  // namespace gridlight::neural
