#include <cmath>
#include <numeric>

#include "internal.hpp"

namespace gridlight::algo::detail {
namespace {

// Independent actor-critic: per-agent state-value critic trained on local
// TD(0), softmax policy trained on the score function weighted by the
// detached TD error.
class IacLearner final : public Learner {
 public:
  IacLearner(const LearnerConfig& cfg, const sim::RoadNetwork& net, Rng& init)
      : Learner(cfg, net),
        critic_(enc_.local_dim(), 1, cfg, cfg.lr_q, false, true,
                init.fork("critic_v")),
        actor_(enc_.local_dim(), kNumActions, cfg, cfg.lr_actor, cfg.rnn, false,
               init.fork("actor")) {}

  std::vector<int> select_actions(std::span<const std::vector<double>> obs,
                                  std::span<const int> prev_actions,
                                  double /*epsilon*/, Rng& rng) override {
    return actor_select(actor_, enc_, obs, prev_actions, rng);
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
      GradBundle gc = neural::make_zero_grads(critic_.online());
      GradBundle ga = neural::make_zero_grads(actor_.online());
      minibatch(buffer, idx, gc, ga, st, nullptr);
      critic_.adam_step(gc);
      actor_.adam_step(ga);
      ++st.minibatches;
    }
    critic_.soft_update_target(cfg_.tau);
    st.loss_q /= st.minibatches;
    st.loss_aux /= st.minibatches;
    return st;
  }

  std::vector<ProbeGroup> probe(const ReplayBuffer& buffer,
                                std::span<const std::size_t> idx) override {
    ProbeGroup critic, actor;
    critic.name = "critic";
    critic.nets = {&critic_.online()};
    critic.grads.push_back(neural::make_zero_grads(critic_.online()));
    actor.name = "actor";
    actor.nets = {&actor_.online()};
    actor.grads.push_back(neural::make_zero_grads(actor_.online()));
    TrainStats st;
    if (cfg_.rnn) {
      Matrix h = actor_.gru.initial_state(enc_.agent_count());
      rnn_period(buffer, idx, h, critic.grads[0], actor.grads[0], st, &actor.coef);
    } else {
      minibatch(buffer, idx, critic.grads[0], actor.grads[0], st, &actor.coef);
    }
    critic.loss = st.loss_q;
    actor.loss = st.loss_aux;
    std::vector<ProbeGroup> out;
    out.push_back(std::move(critic));
    out.push_back(std::move(actor));
    return out;
  }

  double actor_logprob_loss(const ReplayBuffer& buffer,
                            std::span<const std::size_t> idx,
                            std::span<const double> coef) override {
    return logprob_surrogate(actor_, enc_, cfg_, buffer, idx, coef);
  }

  void reset_execution_state() override { actor_.reset_exec(); }

  void save(neural::Checkpoint& ckpt) const override {
    stamp(ckpt);
    critic_.save(ckpt, "critic_v");
    actor_.save(ckpt, "actor");
  }
  void load(const neural::Checkpoint& ckpt) override {
    check_compat(ckpt, false);
    critic_.load(ckpt, "critic_v");
    actor_.load(ckpt, "actor");
    actor_.reset_exec();
  }
  void load_policy(const neural::Checkpoint& ckpt) override {
    check_compat(ckpt, true);
    actor_.load_online(ckpt, "actor");
  }

 private:
  // Shared by training and the probes; coef_out captures the detached
  // per-row actor coefficients when requested.
  void minibatch(const ReplayBuffer& buffer, std::span<const std::size_t> idx,
                 GradBundle& gc, GradBundle& ga, TrainStats& st,
                 std::vector<double>* coef_out) {
    const LocalBatch lb = assemble_local(buffer, idx, enc_);
    const std::size_t rows = lb.b * lb.n;
    neural::MlpCache cache_c;
    const Matrix v = critic_.mlp.forward(lb.x, cache_c);
    const Matrix v_next = critic_.mlp_target.forward(lb.x_next);
    std::vector<double> delta(rows);
    Matrix dv(rows, 1);
    double loss_c = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      delta[i] = lb.reward[i] + cfg_.gamma * v_next(i, 0) - v(i, 0);
      loss_c += 0.5 * delta[i] * delta[i];
      dv(i, 0) = -delta[i] / static_cast<double>(rows);
    }
    critic_.mlp.backward(cache_c, dv, gc);
    st.loss_q += loss_c / static_cast<double>(rows);

    neural::MlpCache cache_a;
    Matrix pi = actor_.mlp.forward(lb.x, cache_a);
    neural::softmax_rows(pi);
    st.loss_aux += actor_grad(pi, lb.act, delta, ga, cache_a, nullptr);
    if (coef_out != nullptr) *coef_out = delta;
  }

  // Score-function gradient with frozen coefficients; returns the surrogate
  // loss -mean(coef * log pi(act)).
  double actor_grad(const Matrix& pi, std::span<const int> act,
                    std::span<const double> coef, GradBundle& ga,
                    const neural::MlpCache& cache_a,
                    std::vector<Matrix>* rnn_dy) {
    const std::size_t rows = pi.rows();
    Matrix dlogits(rows, pi.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      loss -= coef[i] * std::log(pi(i, act[i]));
      for (int j = 0; j < kNumActions; ++j) {
        const double ind = j == act[i] ? 1.0 : 0.0;
        dlogits(i, j) = coef[i] * (pi(i, j) - ind) / static_cast<double>(rows);
      }
    }
    if (rnn_dy != nullptr) {
      const std::size_t n = static_cast<std::size_t>(enc_.agent_count());
      for (std::size_t t = 0; t < rows / n; ++t) {
        rnn_dy->push_back(copy_rows(dlogits, t * n, n));
      }
    } else {
      actor_.mlp.backward(cache_a, dlogits, ga);
    }
    return loss / static_cast<double>(rows);
  }

  void rnn_period(const ReplayBuffer& buffer, std::span<const std::size_t> seq,
                  Matrix& h, GradBundle& gc, GradBundle& ga, TrainStats& st,
                  std::vector<double>* coef_out) {
    const std::size_t n = static_cast<std::size_t>(enc_.agent_count());
    const std::size_t len = seq.size();
    const LocalBatch lb = assemble_local(buffer, seq, enc_);
    const std::size_t rows = len * n;

    neural::MlpCache cache_c;
    const Matrix v = critic_.mlp.forward(lb.x, cache_c);
    const Matrix v_next = critic_.mlp_target.forward(lb.x_next);
    std::vector<double> delta(rows);
    Matrix dv(rows, 1);
    double loss_c = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      delta[i] = lb.reward[i] + cfg_.gamma * v_next(i, 0) - v(i, 0);
      loss_c += 0.5 * delta[i] * delta[i];
      dv(i, 0) = -delta[i] / static_cast<double>(rows);
    }
    critic_.mlp.backward(cache_c, dv, gc);
    st.loss_q += loss_c / static_cast<double>(rows);

    // Recurrent actor: forward the period, then backpropagate through time.
    std::vector<neural::GruStepCache> caches(len);
    Matrix pi_all(rows, kNumActions);
    for (std::size_t t = 0; t < len; ++t) {
      const Matrix x = copy_rows(lb.x, t * n, n);
      Matrix logits = actor_.gru.step(x, h, h, caches[t]);
      neural::softmax_rows(logits);
      for (std::size_t a = 0; a < n; ++a) {
        for (int j = 0; j < kNumActions; ++j) pi_all(t * n + a, j) = logits(a, j);
      }
    }
    std::vector<Matrix> dys;
    st.loss_aux += actor_grad(pi_all, lb.act, delta, ga, neural::MlpCache{}, &dys);
    Matrix dh(n, cfg_.gru_hidden), dh_prev;
    for (std::size_t t = len; t-- > 0;) {
      actor_.gru.backward_step(caches[t], dys[t], dh, ga, dh_prev);
      dh = dh_prev;
    }
    if (coef_out != nullptr) *coef_out = delta;
  }

  TrainStats train_rnn(const ReplayBuffer& buffer, Rng& rng) {
    TrainStats st;
    const std::size_t len = static_cast<std::size_t>(cfg_.rnn_period_len);
    std::size_t start = 0;
    if (!buffer.sample_run(len * cfg_.rnn_periods, rng, start)) {
      st.skipped = true;
      return st;
    }
    Matrix h = actor_.gru.initial_state(enc_.agent_count());
    std::vector<std::size_t> seq(len);
    for (int p = 0; p < cfg_.rnn_periods; ++p) {
      std::iota(seq.begin(), seq.end(), start + p * len);
      GradBundle gc = neural::make_zero_grads(critic_.online());
      GradBundle ga = neural::make_zero_grads(actor_.online());
      rnn_period(buffer, seq, h, gc, ga, st, nullptr);
      critic_.adam_step(gc);
      actor_.adam_step(ga);
      ++st.minibatches;
    }
    critic_.soft_update_target(cfg_.tau);
    st.loss_q /= st.minibatches;
    st.loss_aux /= st.minibatches;
    return st;
  }

  LocalHead critic_;
  LocalHead actor_;
};

}  // namespace

std::unique_ptr<Learner> make_iac(const LearnerConfig& cfg,
                                  const sim::RoadNetwork& net, Rng& init) {
  return std::make_unique<IacLearner>(cfg, net, init);
}

}  // namespace gridlight::algo::detail
