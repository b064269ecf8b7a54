#include "gridlight/neural/gru.hpp"

#include <cmath>
#include <stdexcept>

#include "gridlight/kernels/kernels.hpp"

namespace gridlight::neural {

namespace {

void init_kaiming(Matrix& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows()));
  double* p = w.data();
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = rng.uniform(-limit, limit);
}

void transpose_into(const Matrix& w, Matrix& wt) {
  wt.resize(w.cols(), w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) wt(j, i) = w(i, j);
  }
}

void sigmoid_inplace(Matrix& m) {
  double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(-p[i]));
}

void tanh_inplace(Matrix& m) {
  double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = std::tanh(p[i]);
}

}  // namespace

GruNet::GruNet(GruSpec spec, Rng& rng) : spec_(spec) {
  if (spec_.input_dim == 0 || spec_.output_dim == 0 || spec_.hidden_dim == 0 ||
      spec_.encoder_dim == 0) {
    throw std::invalid_argument("GruNet: zero dimension");
  }
  const std::size_t I = spec_.input_dim, E = spec_.encoder_dim,
                    H = spec_.hidden_dim, O = spec_.output_dim;
  w_enc_ = Matrix(I, E);
  b_enc_ = Matrix(1, E);
  w_z_ = Matrix(E, H);
  u_z_ = Matrix(H, H);
  b_z_ = Matrix(1, H);
  w_r_ = Matrix(E, H);
  u_r_ = Matrix(H, H);
  b_r_ = Matrix(1, H);
  w_h_ = Matrix(E, H);
  u_h_ = Matrix(H, H);
  b_h_ = Matrix(1, H);
  w_out_ = Matrix(H, O);
  b_out_ = Matrix(1, O);
  // Draw in visit order so initialization is a pure function of the stream.
  visit_params([&](const std::string& name, Matrix& m) {
    if (name.ends_with("/w") || name.ends_with("/u")) init_kaiming(m, rng);
  });
  params_mutated();
}

std::size_t GruNet::param_count() const {
  std::size_t n = 0;
  visit_params([&](const std::string&, const Matrix& m) { n += m.size(); });
  return n;
}

Matrix GruNet::step(const Matrix& x, const Matrix& h, Matrix& h_out) const {
  GruStepCache scratch;
  return step(x, h, h_out, scratch);
}

Matrix GruNet::step(const Matrix& x, const Matrix& h, Matrix& h_out,
                    GruStepCache& cache) const {
  if (x.cols() != spec_.input_dim || h.cols() != spec_.hidden_dim ||
      x.rows() != h.rows()) {
    throw std::invalid_argument("GruNet::step: shape mismatch");
  }
  const std::size_t B = x.rows(), H = spec_.hidden_dim;
  cache.x = x;
  cache.h_in = h;

  Matrix e(B, spec_.encoder_dim);
  matmul(x, w_enc_, e, false);
  add_row_bias(e, b_enc_);
  kernels::backend().relu_forward(e.data(), e.size());
  cache.e = e;

  Matrix z(B, H);
  matmul(e, w_z_, z, false);
  matmul(cache.h_in, u_z_, z, true);
  add_row_bias(z, b_z_);
  sigmoid_inplace(z);
  cache.z = z;

  Matrix r(B, H);
  matmul(e, w_r_, r, false);
  matmul(cache.h_in, u_r_, r, true);
  add_row_bias(r, b_r_);
  sigmoid_inplace(r);
  cache.r = r;

  Matrix rh(B, H);
  for (std::size_t i = 0; i < rh.size(); ++i) {
    rh.data()[i] = r.data()[i] * cache.h_in.data()[i];
  }
  cache.rh = rh;

  Matrix c(B, H);
  matmul(e, w_h_, c, false);
  matmul(rh, u_h_, c, true);
  add_row_bias(c, b_h_);
  tanh_inplace(c);
  cache.c = c;

  Matrix hn(B, H);
  for (std::size_t i = 0; i < hn.size(); ++i) {
    const double zi = z.data()[i];
    hn.data()[i] = (1.0 - zi) * cache.h_in.data()[i] + zi * c.data()[i];
  }
  cache.h_out = hn;
  h_out = std::move(hn);

  Matrix y(B, spec_.output_dim);
  matmul(cache.h_out, w_out_, y, false);
  add_row_bias(y, b_out_);
  return y;
}

void GruNet::backward_step(const GruStepCache& cache, const Matrix& dy,
                           const Matrix& dh_next, GradBundle& grads,
                           Matrix& dh_prev) const {
  if (grads.tensors.size() != 13) {
    throw std::invalid_argument("GruNet::backward_step: grad bundle shape");
  }
  const std::size_t B = cache.x.rows(), H = spec_.hidden_dim;
  // Grad bundle order mirrors visit_params:
  // 0 w_enc, 1 b_enc, 2 w_z, 3 u_z, 4 b_z, 5 w_r, 6 u_r, 7 b_r,
  // 8 w_h, 9 u_h, 10 b_h, 11 w_out, 12 b_out.

  // Readout.
  matmul_tn(cache.h_out, dy, grads.tensors[11], true);
  add_col_sums(dy, grads.tensors[12]);
  Matrix dh_total(B, H);
  matmul(dy, wt_out_, dh_total, false);
  for (std::size_t i = 0; i < dh_total.size(); ++i) {
    dh_total.data()[i] += dh_next.data()[i];
  }

  // Blend h' = (1-z) h + z c.
  Matrix dz(B, H), dc(B, H);
  dh_prev.resize(B, H);
  for (std::size_t i = 0; i < dh_total.size(); ++i) {
    const double g = dh_total.data()[i];
    const double zi = cache.z.data()[i];
    dz.data()[i] = g * (cache.c.data()[i] - cache.h_in.data()[i]);
    dc.data()[i] = g * zi;
    dh_prev.data()[i] = g * (1.0 - zi);
  }

  // Candidate: c = tanh(e w_h + (r h) u_h + b_h).
  Matrix dpre_c(B, H);
  for (std::size_t i = 0; i < dc.size(); ++i) {
    const double ci = cache.c.data()[i];
    dpre_c.data()[i] = dc.data()[i] * (1.0 - ci * ci);
  }
  matmul_tn(cache.e, dpre_c, grads.tensors[8], true);
  matmul_tn(cache.rh, dpre_c, grads.tensors[9], true);
  add_col_sums(dpre_c, grads.tensors[10]);
  Matrix drh(B, H);
  matmul(dpre_c, ut_h_, drh, false);
  Matrix dr(B, H);
  for (std::size_t i = 0; i < drh.size(); ++i) {
    dr.data()[i] = drh.data()[i] * cache.h_in.data()[i];
    dh_prev.data()[i] += drh.data()[i] * cache.r.data()[i];
  }

  // Gates (sigmoid derivative from the cached activation).
  Matrix dpre_r(B, H), dpre_z(B, H);
  for (std::size_t i = 0; i < dr.size(); ++i) {
    const double ri = cache.r.data()[i];
    dpre_r.data()[i] = dr.data()[i] * ri * (1.0 - ri);
    const double zi = cache.z.data()[i];
    dpre_z.data()[i] = dz.data()[i] * zi * (1.0 - zi);
  }
  matmul_tn(cache.e, dpre_r, grads.tensors[5], true);
  matmul_tn(cache.h_in, dpre_r, grads.tensors[6], true);
  add_col_sums(dpre_r, grads.tensors[7]);
  matmul_tn(cache.e, dpre_z, grads.tensors[2], true);
  matmul_tn(cache.h_in, dpre_z, grads.tensors[3], true);
  add_col_sums(dpre_z, grads.tensors[4]);
  matmul(dpre_r, ut_r_, dh_prev, true);
  matmul(dpre_z, ut_z_, dh_prev, true);

  // Encoder.
  Matrix de(B, spec_.encoder_dim);
  matmul(dpre_z, wt_z_, de, false);
  matmul(dpre_r, wt_r_, de, true);
  matmul(dpre_c, wt_h_, de, true);
  kernels::backend().relu_backward(cache.e.data(), de.data(), de.size());
  matmul_tn(cache.x, de, grads.tensors[0], true);
  add_col_sums(de, grads.tensors[1]);
}

void GruNet::visit_params(
    const std::function<void(const std::string&, Matrix&)>& fn) {
  fn("enc/w", w_enc_);
  fn("enc/b", b_enc_);
  fn("gate_z/w", w_z_);
  fn("gate_z/u", u_z_);
  fn("gate_z/b", b_z_);
  fn("gate_r/w", w_r_);
  fn("gate_r/u", u_r_);
  fn("gate_r/b", b_r_);
  fn("cand/w", w_h_);
  fn("cand/u", u_h_);
  fn("cand/b", b_h_);
  fn("out/w", w_out_);
  fn("out/b", b_out_);
}

void GruNet::visit_params(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
  fn("enc/w", w_enc_);
  fn("enc/b", b_enc_);
  fn("gate_z/w", w_z_);
  fn("gate_z/u", u_z_);
  fn("gate_z/b", b_z_);
  fn("gate_r/w", w_r_);
  fn("gate_r/u", u_r_);
  fn("gate_r/b", b_r_);
  fn("cand/w", w_h_);
  fn("cand/u", u_h_);
  fn("cand/b", b_h_);
  fn("out/w", w_out_);
  fn("out/b", b_out_);
}

void GruNet::params_mutated() {
  transpose_into(w_z_, wt_z_);
  transpose_into(w_r_, wt_r_);
  transpose_into(w_h_, wt_h_);
  transpose_into(u_z_, ut_z_);
  transpose_into(u_r_, ut_r_);
  transpose_into(u_h_, ut_h_);
  transpose_into(w_out_, wt_out_);
}

}  // namespace gridlight::neural
