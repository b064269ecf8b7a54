#include "gridlight/algo/learner.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "gridlight/agentio/pagerank.hpp"
#include "internal.hpp"

namespace gridlight::algo {

Algo parse_algo(const std::string& name) {
  if (name == "idqn") return Algo::idqn;
  if (name == "iac") return Algo::iac;
  if (name == "coma") return Algo::coma;
  if (name == "vdn") return Algo::vdn;
  if (name == "qmix") return Algo::qmix;
  if (name == "qcombo") return Algo::qcombo;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string algo_name(Algo a) {
  switch (a) {
    case Algo::idqn: return "idqn";
    case Algo::iac: return "iac";
    case Algo::coma: return "coma";
    case Algo::vdn: return "vdn";
    case Algo::qmix: return "qmix";
    case Algo::qcombo: return "qcombo";
  }
  throw std::logic_error("bad algo enum");
}

Learner::Learner(const LearnerConfig& cfg, const sim::RoadNetwork& net)
    : cfg_(cfg), enc_(net.rows, net.cols, cfg.identity) {
  if (cfg.agent_weights.empty()) {
    weights_ = agentio::pagerank_weights(net);
  } else {
    if (static_cast<int>(cfg.agent_weights.size()) != enc_.agent_count()) {
      throw std::invalid_argument("learner: agent_weights size mismatch");
    }
    weights_ = cfg.agent_weights;
  }
}

double Learner::actor_logprob_loss(const ReplayBuffer&,
                                   std::span<const std::size_t>,
                                   std::span<const double>) {
  throw std::logic_error(algo_name(cfg_.algo) + " has no actor head");
}

void Learner::stamp(neural::Checkpoint& ckpt) const {
  ckpt.algo = algo_name(cfg_.algo);
  ckpt.rows = enc_.rows();
  ckpt.cols = enc_.cols();
  ckpt.identity = identity_name(cfg_.identity);
  ckpt.rnn = cfg_.rnn;
}

void Learner::check_compat(const neural::Checkpoint& ckpt, bool policy_only) const {
  if (!ckpt.algo.empty() && ckpt.algo != algo_name(cfg_.algo)) {
    throw std::runtime_error("checkpoint algorithm '" + ckpt.algo +
                             "' does not match learner '" + algo_name(cfg_.algo) + "'");
  }
  if (ckpt.identity != identity_name(cfg_.identity)) {
    throw std::runtime_error("checkpoint identity encoding '" + ckpt.identity +
                             "' does not match learner");
  }
  if (ckpt.rnn != cfg_.rnn) {
    throw std::runtime_error("checkpoint net style (recurrent/feed-forward) mismatch");
  }
  const bool same_grid = ckpt.rows == enc_.rows() && ckpt.cols == enc_.cols();
  const bool needs_same_grid =
      !policy_only || cfg_.identity == IdentityEncoding::onehot;
  if (needs_same_grid && ckpt.rows > 0 && !same_grid) {
    throw std::runtime_error("checkpoint grid shape does not match learner");
  }
}

std::unique_ptr<Learner> Learner::create(const LearnerConfig& cfg,
                                         const sim::RoadNetwork& net, Rng& init) {
  switch (cfg.algo) {
    case Algo::idqn: return detail::make_idqn(cfg, net, init);
    case Algo::iac: return detail::make_iac(cfg, net, init);
    case Algo::coma: return detail::make_coma(cfg, net, init);
    case Algo::vdn: return detail::make_vdn(cfg, net, init);
    case Algo::qmix: return detail::make_qmix(cfg, net, init);
    case Algo::qcombo: return detail::make_qcombo(cfg, net, init);
  }
  throw std::logic_error("bad algo enum");
}

}  // namespace gridlight::algo

namespace gridlight::algo::detail {

void fill_local_rows(const Experience& e, const InputEncoder& enc, bool next,
                     Matrix& out, std::size_t row0) {
  const int n = enc.agent_count();
  for (int a = 0; a < n; ++a) {
    const auto& obs = next ? e.next_obs[a] : e.obs[a];
    const int prev = next ? e.actions[a] : e.prev_actions[a];
    enc.encode_local(obs, prev, a, out.row(row0 + a));
  }
}

LocalBatch assemble_local(const ReplayBuffer& buffer,
                          std::span<const std::size_t> idx,
                          const InputEncoder& enc) {
  LocalBatch lb;
  lb.b = idx.size();
  lb.n = static_cast<std::size_t>(enc.agent_count());
  const std::size_t rows = lb.b * lb.n;
  lb.x.resize(rows, enc.local_dim());
  lb.x_next.resize(rows, enc.local_dim());
  lb.act.resize(rows);
  lb.reward.resize(rows);
  lb.rg.resize(lb.b);
  for (std::size_t i = 0; i < lb.b; ++i) {
    const Experience& e = buffer[idx[i]];
    fill_local_rows(e, enc, false, lb.x, i * lb.n);
    fill_local_rows(e, enc, true, lb.x_next, i * lb.n);
    for (std::size_t a = 0; a < lb.n; ++a) {
      lb.act[i * lb.n + a] = e.actions[a];
      lb.reward[i * lb.n + a] = e.rewards[a];
    }
    lb.rg[i] = e.global_reward;
  }
  return lb;
}

int argmax_row(std::span<const double> q) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(q.size()); ++j) {
    if (q[j] > q[best]) best = j;
  }
  return best;
}

int eps_greedy_row(std::span<const double> q, double epsilon, Rng& rng) {
  if (rng.next_double() < epsilon) return rng.next_int(static_cast<int>(q.size()));
  return argmax_row(q);
}

int sample_row(std::span<const double> p, Rng& rng) {
  const double u = rng.next_double();
  double acc = 0.0;
  for (int j = 0; j < static_cast<int>(p.size()); ++j) {
    acc += p[j];
    if (u < acc) return j;
  }
  return static_cast<int>(p.size()) - 1;
}

double local_td_delta(const Matrix& q, const Matrix& qt_next,
                      std::span<const int> act, std::span<const double> reward,
                      double gamma, std::vector<double>& delta) {
  const std::size_t rows = q.rows();
  assert(qt_next.rows() == rows && act.size() == rows && reward.size() == rows);
  delta.resize(rows);
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto tq = qt_next.row(i);
    const double target = reward[i] + gamma * tq[argmax_row(tq)];
    delta[i] = target - q(i, act[i]);
    loss += 0.5 * delta[i] * delta[i];
  }
  return loss / static_cast<double>(rows);
}

void local_td_out_grad(std::span<const double> delta, std::span<const int> act,
                       std::size_t b, std::size_t n, double lambda,
                       std::span<const double> k, std::span<const double> z2,
                       Matrix& dy) {
  assert(delta.size() == b * n && k.size() >= n && z2.size() >= b);
  dy.fill(0.0);
  const double nd = static_cast<double>(n);
  const double bd = static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t row = i * n + a;
      dy(row, act[row]) = -(delta[row] / nd + lambda * k[a] * z2[i]) / bd;
    }
  }
}

void save_net(neural::Checkpoint& ckpt, const std::string& prefix,
              const neural::ParamOwner& net) {
  net.visit_params([&](const std::string& name, const Matrix& m) {
    ckpt.add(prefix + "/" + name, m);
  });
}

void load_net(neural::ParamOwner& net, const neural::Checkpoint& ckpt,
              const std::string& prefix) {
  net.visit_params([&](const std::string& name, Matrix& m) {
    const Matrix* src = ckpt.find(prefix + "/" + name);
    if (src == nullptr) {
      throw std::runtime_error("checkpoint: missing tensor " + prefix + "/" + name);
    }
    if (!src->same_shape(m)) {
      throw std::runtime_error("checkpoint: shape mismatch for " + prefix + "/" + name);
    }
    m = *src;
  });
  net.params_mutated();
}

LocalHead::LocalHead(std::size_t in_dim, std::size_t out_dim,
                     const LearnerConfig& cfg, double lr, bool recurrent,
                     bool with_target, Rng rng)
    : rnn(recurrent), has_target(with_target), adam(lr) {
  if (rnn) {
    neural::GruSpec spec;
    spec.input_dim = in_dim;
    spec.encoder_dim = cfg.gru_encoder;
    spec.hidden_dim = cfg.gru_hidden;
    spec.output_dim = out_dim;
    gru = neural::GruNet(spec, rng);
    if (has_target) gru_target = gru;
  } else {
    neural::MlpSpec spec;
    spec.input_dim = in_dim;
    spec.hidden = cfg.hidden;
    spec.output_dim = out_dim;
    mlp = neural::Mlp(spec, rng);
    if (has_target) mlp_target = mlp;
  }
}

neural::ParamOwner& LocalHead::online() {
  if (rnn) return gru;
  return mlp;
}
const neural::ParamOwner& LocalHead::online() const {
  if (rnn) return gru;
  return mlp;
}
neural::ParamOwner& LocalHead::target_net() {
  if (rnn) return gru_target;
  return mlp_target;
}
const neural::ParamOwner& LocalHead::target_net() const {
  if (rnn) return gru_target;
  return mlp_target;
}

Matrix LocalHead::forward_exec(const Matrix& x) {
  if (!rnn) return mlp.forward(x);
  if (h_exec.rows() != x.rows()) h_exec = gru.initial_state(x.rows());
  return gru.step(x, h_exec, h_exec);
}

void LocalHead::reset_exec() { h_exec.resize(0, 0); }

void LocalHead::soft_update_target(double tau) {
  if (!has_target) return;
  neural::soft_update(target_net(), online(), tau);
}

void LocalHead::adam_step(const GradBundle& g) {
  if (!neural::all_finite(g)) {
    throw std::runtime_error("training diverged: non-finite gradient");
  }
  adam.step(online(), g);
}

void LocalHead::save(neural::Checkpoint& ckpt, const std::string& prefix) const {
  save_net(ckpt, prefix, online());
  if (has_target) save_net(ckpt, prefix + "_target", target_net());
}

void LocalHead::load(const neural::Checkpoint& ckpt, const std::string& prefix) {
  load_net(online(), ckpt, prefix);
  if (has_target) load_net(target_net(), ckpt, prefix + "_target");
}

void LocalHead::load_online(const neural::Checkpoint& ckpt,
                            const std::string& prefix) {
  load_net(online(), ckpt, prefix);
  if (has_target) neural::copy_params(target_net(), online());
  reset_exec();
}

Matrix exec_input(const InputEncoder& enc,
                  std::span<const std::vector<double>> obs,
                  std::span<const int> prev_actions) {
  const int n = enc.agent_count();
  if (static_cast<int>(obs.size()) != n ||
      static_cast<int>(prev_actions.size()) != n) {
    throw std::invalid_argument("select_actions: wrong observation count");
  }
  Matrix x(n, enc.local_dim());
  for (int a = 0; a < n; ++a) {
    enc.encode_local(obs[a], prev_actions[a], a, x.row(a));
  }
  return x;
}

std::vector<int> value_select(LocalHead& head, const InputEncoder& enc,
                              std::span<const std::vector<double>> obs,
                              std::span<const int> prev_actions, double epsilon,
                              Rng& rng) {
  const Matrix q = head.forward_exec(exec_input(enc, obs, prev_actions));
  std::vector<int> out(q.rows());
  for (std::size_t a = 0; a < q.rows(); ++a) {
    out[a] = eps_greedy_row(q.row(a), epsilon, rng);
  }
  return out;
}

std::vector<int> actor_select(LocalHead& head, const InputEncoder& enc,
                              std::span<const std::vector<double>> obs,
                              std::span<const int> prev_actions, Rng& rng) {
  Matrix logits = head.forward_exec(exec_input(enc, obs, prev_actions));
  neural::softmax_rows(logits);
  std::vector<int> out(logits.rows());
  for (std::size_t a = 0; a < logits.rows(); ++a) {
    out[a] = sample_row(logits.row(a), rng);
  }
  return out;
}

Matrix copy_rows(const Matrix& src, std::size_t row0, std::size_t count) {
  Matrix out(count, src.cols());
  for (std::size_t r = 0; r < count; ++r) {
    const auto s = src.row(row0 + r);
    auto d = out.row(r);
    for (std::size_t c = 0; c < s.size(); ++c) d[c] = s[c];
  }
  return out;
}

double logprob_surrogate(LocalHead& actor, const InputEncoder& enc,
                         const LearnerConfig& cfg, const ReplayBuffer& buffer,
                         std::span<const std::size_t> idx,
                         std::span<const double> coef) {
  const LocalBatch lb = assemble_local(buffer, idx, enc);
  const std::size_t rows = lb.b * lb.n;
  if (coef.size() != rows) {
    throw std::invalid_argument("actor_logprob_loss: coef size mismatch");
  }
  Matrix pi;
  if (cfg.rnn) {
    const std::size_t n = lb.n;
    Matrix h = actor.gru.initial_state(n);
    pi.resize(rows, kNumActions);
    for (std::size_t t = 0; t < lb.b; ++t) {
      const Matrix x = copy_rows(lb.x, t * n, n);
      Matrix logits = actor.gru.step(x, h, h);
      neural::softmax_rows(logits);
      for (std::size_t a = 0; a < n; ++a) {
        for (int j = 0; j < kNumActions; ++j) pi(t * n + a, j) = logits(a, j);
      }
    }
  } else {
    pi = actor.mlp.forward(lb.x);
    neural::softmax_rows(pi);
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    loss -= coef[i] * std::log(pi(i, lb.act[i]));
  }
  return loss / static_cast<double>(rows);
}

}  // namespace gridlight::algo::detail
