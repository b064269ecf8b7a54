#include <numeric>

#include "internal.hpp"

namespace gridlight::algo::detail {
namespace {

// Per-agent utilities trained on local TD, a centralized state-action value
// trained on the blended global reward, and a penalty that pulls the blend
// of the utilities toward the centralized value.  Both nets get one
// optimizer step per minibatch, computed from the same parameter snapshot.
class QcomboLearner final : public Learner {
 public:
  QcomboLearner(const LearnerConfig& cfg, const sim::RoadNetwork& net, Rng& init)
      : Learner(cfg, net),
        q_(enc_.local_dim(), kNumActions, cfg, cfg.lr_q, cfg.rnn, true,
           init.fork("local_q")),
        w_(enc_.global_dim(), 1, cfg, cfg.lr_q, false, true,
           init.fork("global_q")) {}

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
      GradBundle gq = neural::make_zero_grads(q_.online());
      GradBundle gw = neural::make_zero_grads(w_.online());
      minibatch(buffer, idx, gq, gw, st);
      q_.adam_step(gq);
      w_.adam_step(gw);
      ++st.minibatches;
    }
    q_.soft_update_target(cfg_.tau);
    w_.soft_update_target(cfg_.tau);
    st.loss_q /= st.minibatches;
    st.loss_aux /= st.minibatches;
    st.loss_reg /= st.minibatches;
    return st;
  }

  std::vector<ProbeGroup> probe(const ReplayBuffer& buffer,
                                std::span<const std::size_t> idx) override {
    ProbeGroup pg;
    pg.name = "combined";
    pg.nets = {&q_.online(), &w_.online()};
    pg.grads.push_back(neural::make_zero_grads(q_.online()));
    pg.grads.push_back(neural::make_zero_grads(w_.online()));
    TrainStats st;
    if (cfg_.rnn) {
      Matrix h = q_.gru.initial_state(enc_.agent_count());
      Matrix ht = h;
      rnn_period(buffer, idx, h, ht, pg.grads[0], pg.grads[1], st);
    } else {
      minibatch(buffer, idx, pg.grads[0], pg.grads[1], st);
    }
    pg.loss = st.loss_q + st.loss_aux + cfg_.lambda * st.loss_reg;
    std::vector<ProbeGroup> out;
    out.push_back(std::move(pg));
    return out;
  }

  void reset_execution_state() override { q_.reset_exec(); }

  void save(neural::Checkpoint& ckpt) const override {
    stamp(ckpt);
    q_.save(ckpt, "local_q");
    w_.save(ckpt, "global_q");
  }
  void load(const neural::Checkpoint& ckpt) override {
    check_compat(ckpt, false);
    q_.load(ckpt, "local_q");
    w_.load(ckpt, "global_q");
    q_.reset_exec();
  }
  void load_policy(const neural::Checkpoint& ckpt) override {
    check_compat(ckpt, true);
    q_.load_online(ckpt, "local_q");
  }

 private:
  // Builds the centralized-input matrices for the sampled transitions: the
  // taken joint action at t and the target utilities' greedy joint action
  // at t+1 (read from qt_next, laid out (sample, agent) sample-major).
  void global_inputs(const ReplayBuffer& buffer, std::span<const std::size_t> idx,
                     const Matrix& qt_next, Matrix& gx, Matrix& gx_next) const {
    const std::size_t n = static_cast<std::size_t>(enc_.agent_count());
    gx.resize(idx.size(), enc_.global_dim());
    gx_next.resize(idx.size(), enc_.global_dim());
    std::vector<int> next_act(n);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Experience& e = buffer[idx[i]];
      enc_.encode_global(e.obs, e.actions, gx.row(i));
      for (std::size_t a = 0; a < n; ++a) {
        next_act[a] = argmax_row(qt_next.row(i * n + a));
      }
      enc_.encode_global(e.next_obs, next_act, gx_next.row(i));
    }
  }

  // Shared by training and the gradient probe: accumulates both nets'
  // gradients for one minibatch and adds the three loss terms to st.
  void minibatch(const ReplayBuffer& buffer, std::span<const std::size_t> idx,
                 GradBundle& gq, GradBundle& gw, TrainStats& st) {
    const LocalBatch lb = assemble_local(buffer, idx, enc_);
    neural::MlpCache cache;
    const Matrix q = q_.mlp.forward(lb.x, cache);
    const Matrix qt = q_.mlp_target.forward(lb.x_next);
    std::vector<double> delta;
    st.loss_q += local_td_delta(q, qt, lb.act, lb.reward, cfg_.gamma, delta);

    Matrix gx, gx_next;
    global_inputs(buffer, idx, qt, gx, gx_next);
    neural::MlpCache cache_w;
    const Matrix qw = w_.mlp.forward(gx, cache_w);
    const Matrix qw_next = w_.mlp_target.forward(gx_next);

    const std::size_t b = lb.b, n = lb.n;
    std::vector<double> z2(b);
    Matrix dyg(b, 1);
    double loss_aux = 0.0, loss_reg = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const double y_g = lb.rg[i] + cfg_.gamma * qw_next(i, 0);
      double sum_kq = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        sum_kq += weights_[a] * q(i * n + a, lb.act[i * n + a]);
      }
      z2[i] = qw(i, 0) - sum_kq;
      const double resid = y_g - qw(i, 0);
      loss_aux += 0.5 * resid * resid;
      loss_reg += 0.5 * z2[i] * z2[i];
      dyg(i, 0) = -(y_g - (1.0 + cfg_.lambda) * qw(i, 0) + cfg_.lambda * sum_kq) /
                  static_cast<double>(b);
    }
    st.loss_aux += loss_aux / static_cast<double>(b);
    st.loss_reg += loss_reg / static_cast<double>(b);

    Matrix dy(q.rows(), q.cols());
    local_td_out_grad(delta, lb.act, b, n, cfg_.lambda, weights_, z2, dy);
    q_.mlp.backward(cache, dy, gq);
    w_.mlp.backward(cache_w, dyg, gw);
  }

  // Recurrent variant: utilities run through the recurrent head over one
  // consecutive period; the centralized net stays feed-forward and treats
  // the period's transitions as its minibatch.
  void rnn_period(const ReplayBuffer& buffer, std::span<const std::size_t> seq,
                  Matrix& h, Matrix& ht, GradBundle& gq, GradBundle& gw,
                  TrainStats& st) {
    const std::size_t n = static_cast<std::size_t>(enc_.agent_count());
    const std::size_t len = seq.size();
    std::vector<neural::GruStepCache> caches(len);
    Matrix q_all(len * n, kNumActions), qt_all(len * n, kNumActions);
    std::vector<int> act(len * n);
    std::vector<double> reward(len * n);
    Matrix x(n, enc_.local_dim()), xn(n, enc_.local_dim());
    for (std::size_t t = 0; t < len; ++t) {
      const Experience& e = buffer[seq[t]];
      fill_local_rows(e, enc_, false, x, 0);
      fill_local_rows(e, enc_, true, xn, 0);
      const Matrix q = q_.gru.step(x, h, h, caches[t]);
      const Matrix qt = q_.gru_target.step(xn, ht, ht);
      for (std::size_t a = 0; a < n; ++a) {
        for (int j = 0; j < kNumActions; ++j) {
          q_all(t * n + a, j) = q(a, j);
          qt_all(t * n + a, j) = qt(a, j);
        }
        act[t * n + a] = e.actions[a];
        reward[t * n + a] = e.rewards[a];
      }
    }
    std::vector<double> delta;
    st.loss_q += local_td_delta(q_all, qt_all, act, reward, cfg_.gamma, delta);

    Matrix gx, gx_next;
    global_inputs(buffer, seq, qt_all, gx, gx_next);
    neural::MlpCache cache_w;
    const Matrix qw = w_.mlp.forward(gx, cache_w);
    const Matrix qw_next = w_.mlp_target.forward(gx_next);
    std::vector<double> z2(len);
    Matrix dyg(len, 1);
    double loss_aux = 0.0, loss_reg = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double y_g = buffer[seq[t]].global_reward + cfg_.gamma * qw_next(t, 0);
      double sum_kq = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        sum_kq += weights_[a] * q_all(t * n + a, act[t * n + a]);
      }
      z2[t] = qw(t, 0) - sum_kq;
      const double resid = y_g - qw(t, 0);
      loss_aux += 0.5 * resid * resid;
      loss_reg += 0.5 * z2[t] * z2[t];
      dyg(t, 0) = -(y_g - (1.0 + cfg_.lambda) * qw(t, 0) + cfg_.lambda * sum_kq) /
                  static_cast<double>(len);
    }
    st.loss_aux += loss_aux / static_cast<double>(len);
    st.loss_reg += loss_reg / static_cast<double>(len);

    Matrix dy_all(len * n, kNumActions);
    local_td_out_grad(delta, act, len, n, cfg_.lambda, weights_, z2, dy_all);
    Matrix dh(n, cfg_.gru_hidden), dh_prev;
    for (std::size_t t = len; t-- > 0;) {
      const Matrix dy = copy_rows(dy_all, t * n, n);
      q_.gru.backward_step(caches[t], dy, dh, gq, dh_prev);
      dh = dh_prev;
    }
    w_.mlp.backward(cache_w, dyg, gw);
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
      GradBundle gq = neural::make_zero_grads(q_.online());
      GradBundle gw = neural::make_zero_grads(w_.online());
      rnn_period(buffer, seq, h, ht, gq, gw, st);
      q_.adam_step(gq);
      w_.adam_step(gw);
      ++st.minibatches;
    }
    q_.soft_update_target(cfg_.tau);
    w_.soft_update_target(cfg_.tau);
    st.loss_q /= st.minibatches;
    st.loss_aux /= st.minibatches;
    st.loss_reg /= st.minibatches;
    return st;
  }

  LocalHead q_;
  LocalHead w_;
};

}  // namespace

std::unique_ptr<Learner> make_qcombo(const LearnerConfig& cfg,
                                     const sim::RoadNetwork& net, Rng& init) {
  return std::make_unique<QcomboLearner>(cfg, net, init);
}

}  // namespace gridlight::algo::detail
