#include <numeric>

#include "gridlight/algo/mixing.hpp"
#include "internal.hpp"

namespace gridlight::algo::detail {
namespace {

// Per-agent utilities mixed by a state-conditioned monotone network into a
// joint value trained on the blended global reward.  The mixer's weights
// come from linear heads on the global state, made non-negative with |.|,
// so per-agent greedy actions stay jointly greedy.
class QmixLearner final : public Learner {
 public:
  QmixLearner(const LearnerConfig& cfg, const sim::RoadNetwork& net, Rng& init)
      : Learner(cfg, net),
        q_(enc_.local_dim(), kNumActions, cfg, cfg.lr_q, cfg.rnn, true,
           init.fork("local_q")),
        hyper_w1_(make_head(enc_.state_dim(),
                            enc_.agent_count() * kMixHidden, cfg, init, "mix_w1")),
        hyper_b1_(make_head(enc_.state_dim(), kMixHidden, cfg, init, "mix_b1")),
        hyper_w2_(make_head(enc_.state_dim(), kMixHidden, cfg, init, "mix_w2")),
        hyper_b2_(make_head(enc_.state_dim(), 1, cfg, init, "mix_b2")) {}

  std::vector<int> select_actions(std::span<const std::vector<double>> obs,
                                  std::span<const int> prev_actions,
                                  double epsilon, Rng& rng) override {
    return value_select(q_, enc_, obs, prev_actions, epsilon, rng);
  }

  TrainStats train_step(const ReplayBuffer& buffer, Rng& rng) override {
    TrainStats st;
    if (cfg_.rnn) return train_rnn(buffer, rng);
    if (buffer.size() < static_cast<std::size_t>(cfg_.minibatch_size)) {
      st.skipped = true;
      return st;
    }
    for (int m = 0; m < cfg_.minibatches; ++m) {
      const auto idx = buffer.sample_indices(cfg_.minibatch_size, rng);
      Grads g = make_grads();
      st.loss_q += minibatch(buffer, idx, g);
      step_all(g);
      ++st.minibatches;
    }
    soft_update_all();
    st.loss_q /= st.minibatches;
    return st;
  }

  std::vector<ProbeGroup> probe(const ReplayBuffer& buffer,
                                std::span<const std::size_t> idx) override {
    ProbeGroup pg;
    pg.name = "td";
    pg.nets = {&q_.online(), &hyper_w1_.online(), &hyper_b1_.online(),
               &hyper_w2_.online(), &hyper_b2_.online()};
    Grads g = make_grads();
    if (cfg_.rnn) {
      Matrix h = q_.gru.initial_state(enc_.agent_count());
      Matrix ht = h;
      pg.loss = rnn_period(buffer, idx, h, ht, g);
    } else {
      pg.loss = minibatch(buffer, idx, g);
    }
    pg.grads.push_back(std::move(g.q));
    pg.grads.push_back(std::move(g.w1));
    pg.grads.push_back(std::move(g.b1));
    pg.grads.push_back(std::move(g.w2));
    pg.grads.push_back(std::move(g.b2));
    std::vector<ProbeGroup> out;
    out.push_back(std::move(pg));
    return out;
  }

  void reset_execution_state() override { q_.reset_exec(); }

  void save(neural::Checkpoint& ckpt) const override {
    stamp(ckpt);
    q_.save(ckpt, "local_q");
    hyper_w1_.save(ckpt, "mix_w1");
    hyper_b1_.save(ckpt, "mix_b1");
    hyper_w2_.save(ckpt, "mix_w2");
    hyper_b2_.save(ckpt, "mix_b2");
  }
  void load(const neural::Checkpoint& ckpt) override {
    check_compat(ckpt, false);
    q_.load(ckpt, "local_q");
    hyper_w1_.load(ckpt, "mix_w1");
    hyper_b1_.load(ckpt, "mix_b1");
    hyper_w2_.load(ckpt, "mix_w2");
    hyper_b2_.load(ckpt, "mix_b2");
    q_.reset_exec();
  }
  void load_policy(const neural::Checkpoint& ckpt) override {
    check_compat(ckpt, true);
    q_.load_online(ckpt, "local_q");
  }

 private:
  struct Grads {
    GradBundle q, w1, b1, w2, b2;
  };

  static LocalHead make_head(std::size_t in, std::size_t out,
                             const LearnerConfig& cfg, Rng& init,
                             const char* tag) {
    LearnerConfig linear = cfg;
    linear.hidden.clear();  // mixer heads are single linear maps of the state
    return LocalHead(in, out, linear, cfg.lr_q, false, true, init.fork(tag));
  }

  Grads make_grads() {
    return Grads{neural::make_zero_grads(q_.online()),
                 neural::make_zero_grads(hyper_w1_.online()),
                 neural::make_zero_grads(hyper_b1_.online()),
                 neural::make_zero_grads(hyper_w2_.online()),
                 neural::make_zero_grads(hyper_b2_.online())};
  }

  void step_all(Grads& g) {
    q_.adam_step(g.q);
    hyper_w1_.adam_step(g.w1);
    hyper_b1_.adam_step(g.b1);
    hyper_w2_.adam_step(g.w2);
    hyper_b2_.adam_step(g.b2);
  }

  void soft_update_all() {
    q_.soft_update_target(cfg_.tau);
    hyper_w1_.soft_update_target(cfg_.tau);
    hyper_b1_.soft_update_target(cfg_.tau);
    hyper_w2_.soft_update_target(cfg_.tau);
    hyper_b2_.soft_update_target(cfg_.tau);
  }

  // Mixes per-sample utilities through the online or target mixer heads.
  // q_rows: (sample, agent) sample-major values already reduced to one
  // scalar per agent.  Returns the per-sample mixed values; tapes captured
  // only for the online (training) side.
  std::vector<double> mix_batch(const Matrix& states, const Matrix& q_rows,
                                bool target, std::vector<MixTape>* tapes,
                                neural::MlpCache* c_w1, neural::MlpCache* c_b1,
                                neural::MlpCache* c_w2,
                                neural::MlpCache* c_b2) const {
    const std::size_t b = states.rows();
    const Matrix w1 = target ? hyper_w1_.mlp_target.forward(states)
                             : hyper_w1_.mlp.forward(states, *c_w1);
    const Matrix b1 = target ? hyper_b1_.mlp_target.forward(states)
                             : hyper_b1_.mlp.forward(states, *c_b1);
    const Matrix w2 = target ? hyper_w2_.mlp_target.forward(states)
                             : hyper_w2_.mlp.forward(states, *c_w2);
    const Matrix b2 = target ? hyper_b2_.mlp_target.forward(states)
                             : hyper_b2_.mlp.forward(states, *c_b2);
    std::vector<double> out(b);
    if (tapes != nullptr) tapes->resize(b);
    for (std::size_t i = 0; i < b; ++i) {
      out[i] = mix_forward(q_rows.row(i), w1.row(i), b1.row(i), w2.row(i),
                           b2(i, 0), tapes != nullptr ? &(*tapes)[i] : nullptr);
    }
    return out;
  }

  double minibatch(const ReplayBuffer& buffer, std::span<const std::size_t> idx,
                   Grads& g) {
    const LocalBatch lb = assemble_local(buffer, idx, enc_);
    const std::size_t b = lb.b, n = lb.n;
    neural::MlpCache cache;
    const Matrix q = q_.mlp.forward(lb.x, cache);
    const Matrix qt = q_.mlp_target.forward(lb.x_next);

    Matrix states(b, enc_.state_dim()), states_next(b, enc_.state_dim());
    Matrix q_taken(b, n), q_next(b, n);
    for (std::size_t i = 0; i < b; ++i) {
      const Experience& e = buffer[idx[i]];
      enc_.encode_state(e.obs, states.row(i));
      enc_.encode_state(e.next_obs, states_next.row(i));
      for (std::size_t a = 0; a < n; ++a) {
        q_taken(i, a) = q(i * n + a, lb.act[i * n + a]);
        const auto tq = qt.row(i * n + a);
        q_next(i, a) = tq[argmax_row(tq)];
      }
    }

    std::vector<MixTape> tapes;
    neural::MlpCache c_w1, c_b1, c_w2, c_b2;
    const std::vector<double> q_tot =
        mix_batch(states, q_taken, false, &tapes, &c_w1, &c_b1, &c_w2, &c_b2);
    const std::vector<double> q_tot_next =
        mix_batch(states_next, q_next, true, nullptr, nullptr, nullptr,
                  nullptr, nullptr);

    const std::size_t hdim = kMixHidden;
    Matrix dy(q.rows(), q.cols());
    Matrix d_w1(b, n * hdim), d_b1(b, hdim), d_w2(b, hdim), d_b2(b, 1);
    std::vector<double> dq(n);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const double delta = lb.rg[i] + cfg_.gamma * q_tot_next[i] - q_tot[i];
      loss += 0.5 * delta * delta;
      const double dout = -delta / static_cast<double>(b);
      double db2 = 0.0;
      mix_backward(tapes[i], dout, dq, d_w1.row(i), d_b1.row(i), d_w2.row(i), db2);
      d_b2(i, 0) = db2;
      for (std::size_t a = 0; a < n; ++a) {
        dy(i * n + a, lb.act[i * n + a]) = dq[a];
      }
    }
    q_.mlp.backward(cache, dy, g.q);
    hyper_w1_.mlp.backward(c_w1, d_w1, g.w1);
    hyper_b1_.mlp.backward(c_b1, d_b1, g.b1);
    hyper_w2_.mlp.backward(c_w2, d_w2, g.w2);
    hyper_b2_.mlp.backward(c_b2, d_b2, g.b2);
    return loss / static_cast<double>(b);
  }

  double rnn_period(const ReplayBuffer& buffer, std::span<const std::size_t> seq,
                    Matrix& h, Matrix& ht, Grads& g) {
    const std::size_t n = static_cast<std::size_t>(enc_.agent_count());
    const std::size_t len = seq.size();
    std::vector<neural::GruStepCache> caches(len);
    std::vector<int> act(len * n);
    Matrix states(len, enc_.state_dim()), states_next(len, enc_.state_dim());
    Matrix q_taken(len, n), q_next(len, n);
    Matrix x(n, enc_.local_dim()), xn(n, enc_.local_dim());
    for (std::size_t t = 0; t < len; ++t) {
      const Experience& e = buffer[seq[t]];
      fill_local_rows(e, enc_, false, x, 0);
      fill_local_rows(e, enc_, true, xn, 0);
      const Matrix q = q_.gru.step(x, h, h, caches[t]);
      const Matrix qt = q_.gru_target.step(xn, ht, ht);
      enc_.encode_state(e.obs, states.row(t));
      enc_.encode_state(e.next_obs, states_next.row(t));
      for (std::size_t a = 0; a < n; ++a) {
        act[t * n + a] = e.actions[a];
        q_taken(t, a) = q(a, e.actions[a]);
        const auto tq = qt.row(a);
        q_next(t, a) = tq[argmax_row(tq)];
      }
    }

    std::vector<MixTape> tapes;
    neural::MlpCache c_w1, c_b1, c_w2, c_b2;
    const std::vector<double> q_tot =
        mix_batch(states, q_taken, false, &tapes, &c_w1, &c_b1, &c_w2, &c_b2);
    const std::vector<double> q_tot_next =
        mix_batch(states_next, q_next, true, nullptr, nullptr, nullptr,
                  nullptr, nullptr);

    const std::size_t hdim = kMixHidden;
    Matrix dy_all(len * n, kNumActions);
    Matrix d_w1(len, n * hdim), d_b1(len, hdim), d_w2(len, hdim), d_b2(len, 1);
    std::vector<double> dq(n);
    double loss = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double delta =
          buffer[seq[t]].global_reward + cfg_.gamma * q_tot_next[t] - q_tot[t];
      loss += 0.5 * delta * delta;
      const double dout = -delta / static_cast<double>(len);
      double db2 = 0.0;
      mix_backward(tapes[t], dout, dq, d_w1.row(t), d_b1.row(t), d_w2.row(t), db2);
      d_b2(t, 0) = db2;
      for (std::size_t a = 0; a < n; ++a) {
        dy_all(t * n + a, act[t * n + a]) = dq[a];
      }
    }
    Matrix dh(n, cfg_.gru_hidden), dh_prev;
    for (std::size_t t = len; t-- > 0;) {
      const Matrix dy = copy_rows(dy_all, t * n, n);
      q_.gru.backward_step(caches[t], dy, dh, g.q, dh_prev);
      dh = dh_prev;
    }
    hyper_w1_.mlp.backward(c_w1, d_w1, g.w1);
    hyper_b1_.mlp.backward(c_b1, d_b1, g.b1);
    hyper_w2_.mlp.backward(c_w2, d_w2, g.w2);
    hyper_b2_.mlp.backward(c_b2, d_b2, g.b2);
    return loss / static_cast<double>(len);
  }

  TrainStats train_rnn(const ReplayBuffer& buffer, Rng& rng) {
    TrainStats st;
    const std::size_t len = static_cast<std::size_t>(cfg_.rnn_period_len);
    std::size_t start = 0;
    if (!buffer.sample_run(len * cfg_.rnn_periods, rng, start)) {
      st.skipped = true;
      return st;
    }
    Matrix h = q_.gru.initial_state(enc_.agent_count());
    Matrix ht = h;
    std::vector<std::size_t> seq(len);
    for (int p = 0; p < cfg_.rnn_periods; ++p) {
      std::iota(seq.begin(), seq.end(), start + p * len);
      Grads g = make_grads();
      st.loss_q += rnn_period(buffer, seq, h, ht, g);
      step_all(g);
      ++st.minibatches;
    }
    soft_update_all();
    st.loss_q /= st.minibatches;
    return st;
  }

  LocalHead q_;
  LocalHead hyper_w1_, hyper_b1_, hyper_w2_, hyper_b2_;
};

}  // namespace

std::unique_ptr<Learner> make_qmix(const LearnerConfig& cfg,
                                   const sim::RoadNetwork& net, Rng& init) {
  return std::make_unique<QmixLearner>(cfg, net, init);
}

}  // namespace gridlight::algo::detail
