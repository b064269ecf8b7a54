#include <cmath>
#include <numeric>

#include "internal.hpp"

namespace gridlight::algo::detail {
namespace {

// Counterfactual actor-critic: a centralized per-agent action-value critic
// over {global state, other agents' actions, agent label, own observation},
// trained on the blended global reward; the actor is trained on the
// counterfactual advantage - the critic's value of the taken action minus
// the policy-expected value over own actions, which has zero expectation
// under the policy and so subtracts a per-agent baseline without bias.
class ComaLearner final : public Learner {
 public:
  ComaLearner(const LearnerConfig& cfg, const sim::RoadNetwork& net, Rng& init)
      : Learner(cfg, net),
        critic_(enc_.coma_critic_dim(), kNumActions, cfg, cfg.lr_q, false, true,
                init.fork("critic_q")),
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
    minibatch(buffer, idx, critic.grads[0], actor.grads[0], st, &actor.coef);
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
    critic_.save(ckpt, "critic_q");
    actor_.save(ckpt, "actor");
  }
  void load(const neural::Checkpoint& ckpt) override {
    check_compat(ckpt, false);
    critic_.load(ckpt, "critic_q");
    actor_.load(ckpt, "actor");
    actor_.reset_exec();
  }
  void load_policy(const neural::Checkpoint& ckpt) override {
    check_compat(ckpt, true);
    actor_.load_online(ckpt, "actor");
  }

 private:
  // Actor policies over one batch: feed-forward in training minibatches,
  // streamed over the period (separate hidden chains for the current and
  // next observation sequences) in recurrent mode.
  void policies(const LocalBatch& lb, neural::MlpCache* cache_now, Matrix& pi,
                Matrix& pi_next, std::vector<neural::GruStepCache>* caches,
                Matrix* h_carry, Matrix* hn_carry) {
    const std::size_t n = lb.n;
    if (!cfg_.rnn) {
      pi = actor_.mlp.forward(lb.x, *cache_now);
      neural::softmax_rows(pi);
      pi_next = actor_.mlp.forward(lb.x_next);
      neural::softmax_rows(pi_next);
      return;
    }
    Matrix local_h = actor_.gru.initial_state(n);
    Matrix local_hn = actor_.gru.initial_state(n);
    Matrix& h = h_carry != nullptr ? *h_carry : local_h;
    Matrix& hn = hn_carry != nullptr ? *hn_carry : local_hn;
    pi.resize(lb.b * n, kNumActions);
    pi_next.resize(lb.b * n, kNumActions);
    caches->resize(lb.b);
    for (std::size_t t = 0; t < lb.b; ++t) {
      Matrix logits = actor_.gru.step(copy_rows(lb.x, t * n, n), h, h, (*caches)[t]);
      neural::softmax_rows(logits);
      Matrix logits_next = actor_.gru.step(copy_rows(lb.x_next, t * n, n), hn, hn);
      neural::softmax_rows(logits_next);
      for (std::size_t a = 0; a < n; ++a) {
        for (int j = 0; j < kNumActions; ++j) {
          pi(t * n + a, j) = logits(a, j);
          pi_next(t * n + a, j) = logits_next(a, j);
        }
      }
    }
  }

  void minibatch(const ReplayBuffer& buffer, std::span<const std::size_t> idx,
                 GradBundle& gc, GradBundle& ga, TrainStats& st,
                 std::vector<double>* coef_out, Matrix* h_carry = nullptr,
                 Matrix* hn_carry = nullptr) {
    const LocalBatch lb = assemble_local(buffer, idx, enc_);
    const std::size_t b = lb.b, n = lb.n;
    const std::size_t rows = b * n;

    neural::MlpCache cache_a;
    Matrix pi, pi_next;
    std::vector<neural::GruStepCache> caches_a;
    policies(lb, &cache_a, pi, pi_next, &caches_a, h_carry, hn_carry);

    // Next joint action: each agent's policy mode at the next observation.
    std::vector<int> next_act(rows);
    for (std::size_t i = 0; i < rows; ++i) next_act[i] = argmax_row(pi_next.row(i));

    Matrix xc(rows, enc_.coma_critic_dim()), xc_next(rows, enc_.coma_critic_dim());
    std::vector<int> joint_next(n);
    for (std::size_t i = 0; i < b; ++i) {
      const Experience& e = buffer[idx[i]];
      for (std::size_t a = 0; a < n; ++a) joint_next[a] = next_act[i * n + a];
      for (std::size_t a = 0; a < n; ++a) {
        enc_.encode_coma_critic(e.obs, e.actions, a, xc.row(i * n + a));
        enc_.encode_coma_critic(e.next_obs, joint_next, a, xc_next.row(i * n + a));
      }
    }

    neural::MlpCache cache_c;
    const Matrix qc = critic_.mlp.forward(xc, cache_c);
    const Matrix qc_next = critic_.mlp_target.forward(xc_next);

    Matrix dqc(rows, kNumActions);
    std::vector<double> adv(rows);
    double loss_c = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t a = 0; a < n; ++a) {
        const std::size_t r = i * n + a;
        const double y = lb.rg[i] + cfg_.gamma * qc_next(r, next_act[r]);
        const double delta = y - qc(r, lb.act[r]);
        loss_c += 0.5 * delta * delta;
        dqc(r, lb.act[r]) = -delta / static_cast<double>(rows);
        adv[r] = counterfactual_advantage(qc.row(r), pi.row(r), lb.act[r]);
      }
    }
    critic_.mlp.backward(cache_c, dqc, gc);
    st.loss_q += loss_c / static_cast<double>(rows);

    Matrix dlogits(rows, kNumActions);
    double loss_a = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      loss_a -= adv[i] * std::log(pi(i, lb.act[i]));
      for (int j = 0; j < kNumActions; ++j) {
        const double ind = j == lb.act[i] ? 1.0 : 0.0;
        dlogits(i, j) = adv[i] * (pi(i, j) - ind) / static_cast<double>(rows);
      }
    }
    if (cfg_.rnn) {
      Matrix dh(n, cfg_.gru_hidden), dh_prev;
      for (std::size_t t = b; t-- > 0;) {
        const Matrix dy = copy_rows(dlogits, t * n, n);
        actor_.gru.backward_step(caches_a[t], dy, dh, ga, dh_prev);
        dh = dh_prev;
      }
    } else {
      actor_.mlp.backward(cache_a, dlogits, ga);
    }
    st.loss_aux += loss_a / static_cast<double>(rows);
    if (coef_out != nullptr) *coef_out = adv;
  }

  TrainStats train_rnn(const ReplayBuffer& buffer, Rng& rng) {
    TrainStats st;
    const std::size_t len = static_cast<std::size_t>(cfg_.rnn_period_len);
    std::size_t start = 0;
    if (!buffer.sample_run(len * cfg_.rnn_periods, rng, start)) {
      st.skipped = true;
      return st;
    }
    std::vector<std::size_t> seq(len);
    Matrix h = actor_.gru.initial_state(enc_.agent_count());
    Matrix hn = actor_.gru.initial_state(enc_.agent_count());
    for (int p = 0; p < cfg_.rnn_periods; ++p) {
      std::iota(seq.begin(), seq.end(), start + p * len);
      GradBundle gc = neural::make_zero_grads(critic_.online());
      GradBundle ga = neural::make_zero_grads(actor_.online());
      minibatch(buffer, seq, gc, ga, st, nullptr, &h, &hn);
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

std::unique_ptr<Learner> make_coma(const LearnerConfig& cfg,
                                   const sim::RoadNetwork& net, Rng& init) {
  return std::make_unique<ComaLearner>(cfg, net, init);
}

}  // namespace gridlight::algo::detail
