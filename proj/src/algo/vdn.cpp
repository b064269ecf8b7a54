#include <numeric>

#include "internal.hpp"

namespace gridlight::algo::detail {
namespace {

// Value decomposition: the joint value is the plain sum of per-agent
// utilities, trained on the blended global reward; the sum's TD error
// backpropagates into every agent's taken-action output.
class VdnLearner final : public Learner {
 public:
  VdnLearner(const LearnerConfig& cfg, const sim::RoadNetwork& net, Rng& init)
      : Learner(cfg, net),
        q_(enc_.local_dim(), kNumActions, cfg, cfg.lr_q, cfg.rnn, true,
           init.fork("local_q")) {}

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
      GradBundle g = neural::make_zero_grads(q_.online());
      st.loss_q += minibatch(buffer, idx, g);
      q_.adam_step(g);
      ++st.minibatches;
    }
    q_.soft_update_target(cfg_.tau);
    st.loss_q /= st.minibatches;
    return st;
  }

  std::vector<ProbeGroup> probe(const ReplayBuffer& buffer,
                                std::span<const std::size_t> idx) override {
    ProbeGroup pg;
    pg.name = "td";
    pg.nets = {&q_.online()};
    pg.grads.push_back(neural::make_zero_grads(q_.online()));
    if (cfg_.rnn) {
      Matrix h = q_.gru.initial_state(enc_.agent_count());
      Matrix ht = h;
      pg.loss = rnn_period(buffer, idx, h, ht, pg.grads[0]);
    } else {
      pg.loss = minibatch(buffer, idx, pg.grads[0]);
    }
    std::vector<ProbeGroup> out;
    out.push_back(std::move(pg));
    return out;
  }

  void reset_execution_state() override { q_.reset_exec(); }

  void save(neural::Checkpoint& ckpt) const override {
    stamp(ckpt);
    q_.save(ckpt, "local_q");
  }
  void load(const neural::Checkpoint& ckpt) override {
    check_compat(ckpt, false);
    q_.load(ckpt, "local_q");
    q_.reset_exec();
  }
  void load_policy(const neural::Checkpoint& ckpt) override {
    check_compat(ckpt, true);
    q_.load_online(ckpt, "local_q");
  }

 private:
  // TD error of the summed value for rows [i0, i0+n): the per-sample loss and
  // the shared output gradient written to every agent's taken action.
  static double sum_td(const Matrix& q, const Matrix& qt,
                       std::span<const int> act, double reward, double gamma,
                       std::size_t i0, std::size_t n, double inv_b, Matrix& dy) {
    double q_tot = 0.0, next_tot = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      q_tot += q(i0 + a, act[i0 + a]);
      const auto tq = qt.row(i0 + a);
      next_tot += tq[argmax_row(tq)];
    }
    const double delta = reward + gamma * next_tot - q_tot;
    for (std::size_t a = 0; a < n; ++a) {
      dy(i0 + a, act[i0 + a]) = -delta * inv_b;
    }
    return 0.5 * delta * delta;
  }

  double minibatch(const ReplayBuffer& buffer, std::span<const std::size_t> idx,
                   GradBundle& g) {
    const LocalBatch lb = assemble_local(buffer, idx, enc_);
    neural::MlpCache cache;
    const Matrix q = q_.mlp.forward(lb.x, cache);
    const Matrix qt = q_.mlp_target.forward(lb.x_next);
    Matrix dy(q.rows(), q.cols());
    const double inv_b = 1.0 / static_cast<double>(lb.b);
    double loss = 0.0;
    for (std::size_t i = 0; i < lb.b; ++i) {
      loss += sum_td(q, qt, lb.act, lb.rg[i], cfg_.gamma, i * lb.n, lb.n, inv_b, dy);
    }
    q_.mlp.backward(cache, dy, g);
    return loss * inv_b;
  }

  double rnn_period(const ReplayBuffer& buffer, std::span<const std::size_t> seq,
                    Matrix& h, Matrix& ht, GradBundle& g) {
    const std::size_t n = static_cast<std::size_t>(enc_.agent_count());
    const std::size_t len = seq.size();
    std::vector<neural::GruStepCache> caches(len);
    Matrix q_all(len * n, kNumActions), qt_all(len * n, kNumActions);
    std::vector<int> act(len * n);
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
      }
    }
    Matrix dy_all(len * n, kNumActions);
    const double inv_b = 1.0 / static_cast<double>(len);
    double loss = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      loss += sum_td(q_all, qt_all, act, buffer[seq[t]].global_reward, cfg_.gamma,
                     t * n, n, inv_b, dy_all);
    }
    Matrix dh(n, cfg_.gru_hidden), dh_prev;
    for (std::size_t t = len; t-- > 0;) {
      const Matrix dy = copy_rows(dy_all, t * n, n);
      q_.gru.backward_step(caches[t], dy, dh, g, dh_prev);
      dh = dh_prev;
    }
    return loss * inv_b;
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
      GradBundle g = neural::make_zero_grads(q_.online());
      st.loss_q += rnn_period(buffer, seq, h, ht, g);
      q_.adam_step(g);
      ++st.minibatches;
    }
    q_.soft_update_target(cfg_.tau);
    st.loss_q /= st.minibatches;
    return st;
  }

  LocalHead q_;
};

}  // namespace

std::unique_ptr<Learner> make_vdn(const LearnerConfig& cfg,
                                  const sim::RoadNetwork& net, Rng& init) {
  return std::make_unique<VdnLearner>(cfg, net, init);
}

}  // namespace gridlight::algo::detail
