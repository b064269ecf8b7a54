#include "gridlight/neural/optim.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "gridlight/core/rng.hpp"
#include "gridlight/kernels/kernels.hpp"

namespace gridlight::neural {

void Adam::step(ParamOwner& net, const GradBundle& grads) {
  std::vector<Matrix*> params;
  net.visit_params(
      [&](const std::string&, Matrix& m) { params.push_back(&m); });
  if (params.size() != grads.tensors.size()) {
    throw std::invalid_argument("Adam::step: bundle size mismatch");
  }
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  ++t_;
  const double bc1 = 1.0 / (1.0 - std::pow(beta1_, static_cast<double>(t_)));
  const double bc2 = 1.0 / (1.0 - std::pow(beta2_, static_cast<double>(t_)));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = grads.tensors[i];
    if (!p.same_shape(g) || !p.same_shape(m_[i])) {
      throw std::invalid_argument("Adam::step: tensor shape mismatch");
    }
    kernels::backend().adam_step(p.data(), m_[i].data(), v_[i].data(),
                                 g.data(), p.size(), lr_, beta1_, beta2_, eps_,
                                 bc1, bc2);
  }
  net.params_mutated();
}

void soft_update(ParamOwner& target, const ParamOwner& online, double tau) {
  std::vector<const Matrix*> src;
  online.visit_params(
      [&](const std::string&, const Matrix& m) { src.push_back(&m); });
  std::size_t i = 0;
  target.visit_params([&](const std::string&, Matrix& m) {
    if (i >= src.size() || !m.same_shape(*src[i])) {
      throw std::invalid_argument("soft_update: net shape mismatch");
    }
    kernels::backend().axpby(tau, src[i]->data(), 1.0 - tau, m.data(),
                             m.size());
    ++i;
  });
  if (i != src.size()) {
    throw std::invalid_argument("soft_update: net layout mismatch");
  }
  target.params_mutated();
}

void copy_params(ParamOwner& dst, const ParamOwner& src) {
  std::vector<const Matrix*> s;
  src.visit_params(
      [&](const std::string&, const Matrix& m) { s.push_back(&m); });
  std::size_t i = 0;
  dst.visit_params([&](const std::string&, Matrix& m) {
    if (i >= s.size() || !m.same_shape(*s[i])) {
      throw std::invalid_argument("copy_params: net shape mismatch");
    }
    std::memcpy(m.data(), s[i]->data(), m.size() * sizeof(double));
    ++i;
  });
  dst.params_mutated();
}

std::uint64_t params_digest(const ParamOwner& net) {
  std::uint64_t h = 14695981039346656037ull;
  net.visit_params([&](const std::string& name, const Matrix& m) {
    for (unsigned char c : name) {
      h ^= c;
      h *= 1099511628211ull;
    }
    const unsigned char* bytes =
        reinterpret_cast<const unsigned char*>(m.data());
    for (std::size_t i = 0; i < m.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  });
  return h;
}

std::vector<double> flatten_params(const ParamOwner& net) {
  std::vector<double> out;
  net.visit_params([&](const std::string&, const Matrix& m) {
    out.insert(out.end(), m.data(), m.data() + m.size());
  });
  return out;
}

void unflatten_params(ParamOwner& net, const std::vector<double>& flat) {
  std::size_t off = 0;
  net.visit_params([&](const std::string&, Matrix& m) {
    if (off + m.size() > flat.size()) {
      throw std::invalid_argument("unflatten_params: size mismatch");
    }
    std::memcpy(m.data(), flat.data() + off, m.size() * sizeof(double));
    off += m.size();
  });
  if (off != flat.size()) {
    throw std::invalid_argument("unflatten_params: size mismatch");
  }
  net.params_mutated();
}

std::vector<double> flatten_grads(const GradBundle& g) {
  std::vector<double> out;
  for (const auto& t : g.tensors) {
    out.insert(out.end(), t.data(), t.data() + t.size());
  }
  return out;
}

}  // namespace gridlight::neural
