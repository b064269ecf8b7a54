#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gridlight/algo/encoding.hpp"
#include "gridlight/algo/replay.hpp"
#include "gridlight/core/rng.hpp"
#include "gridlight/neural/checkpoint.hpp"
#include "gridlight/neural/mlp.hpp"
#include "gridlight/sim/network.hpp"

namespace gridlight::algo {

enum class Algo { idqn, iac, coma, vdn, qmix, qcombo };

Algo parse_algo(const std::string& name);
std::string algo_name(Algo a);

// Counterfactual advantage of the taken action: the critic's value of the
// action minus the policy-expected critic value over own actions.  Its
// expectation under pi_row is identically zero, so subtracting the baseline
// adds no bias to the policy gradient.
inline double counterfactual_advantage(std::span<const double> q_row,
                                       std::span<const double> pi_row,
                                       int action) {
  double baseline = 0.0;
  for (std::size_t j = 0; j < q_row.size(); ++j) baseline += pi_row[j] * q_row[j];
  return q_row[action] - baseline;
}

struct LearnerConfig {
  Algo algo = Algo::qcombo;
  IdentityEncoding identity = IdentityEncoding::coords;
  bool rnn = false;

  double gamma = 0.99;
  double lr_q = 1e-3;      // value heads, critics, mixers, the global head
  double lr_actor = 1e-4;
  double tau = 0.01;       // soft target-update rate, applied once per train step
  double lambda = 1.0;     // weight of the local/global consistency term

  int minibatches = 100;   // per train step (feed-forward nets)
  int minibatch_size = 30;
  int rnn_periods = 6;     // per train step (recurrent nets): consecutive
  int rnn_period_len = 30; //   periods, one optimizer step per period

  std::vector<std::size_t> hidden = {256, 256};  // value/critic/actor MLPs
  std::size_t gru_encoder = 64;
  std::size_t gru_hidden = 64;

  // Blend weights for per-agent utilities in the global objective.  Empty
  // means: derive from the road network's link structure at creation.
  std::vector<double> agent_weights;
};

struct TrainStats {
  double loss_q = 0.0;    // per-agent TD or critic loss
  double loss_aux = 0.0;  // global TD loss / actor surrogate, where present
  double loss_reg = 0.0;  // raw consistency penalty (before its weight)
  int minibatches = 0;
  bool skipped = false;   // not enough replay data yet
};

// One differentiable objective and the nets it trains, with the exact
// gradients a training step would apply.  Exposed so tests can hold the
// implementation to a finite-difference oracle; objectives that detach a
// coefficient (actor losses) report only the nets the coefficient does not
// flow through.
struct ProbeGroup {
  std::string name;
  double loss = 0.0;
  std::vector<neural::ParamOwner*> nets;
  std::vector<neural::GradBundle> grads;  // parallel to nets
  // Actor groups only: the detached per-row coefficients of the log-prob
  // surrogate.  Their gradients ignore the coefficients' own parameter
  // dependence, so a finite-difference oracle must hold these frozen and
  // differentiate actor_logprob_loss instead of re-probing.
  std::vector<double> coef;
};

// One multi-agent learner: shared-parameter per-agent heads plus whatever
// centralized machinery the algorithm needs.  All randomness flows through
// the Rng arguments, so equal seeds give bit-equal runs.
class Learner {
 public:
  static std::unique_ptr<Learner> create(const LearnerConfig& cfg,
                                         const sim::RoadNetwork& net, Rng& init);
  virtual ~Learner() = default;

  const LearnerConfig& config() const { return cfg_; }
  const InputEncoder& encoder() const { return enc_; }
  int agent_count() const { return enc_.agent_count(); }
  std::span<const double> agent_weights() const { return weights_; }

  // Behavior policy for one decision.  Value-based learners act
  // epsilon-greedily (ties keep the phase); actor-based learners sample
  // from the softmax policy and ignore epsilon.
  virtual std::vector<int> select_actions(std::span<const std::vector<double>> obs,
                                          std::span<const int> prev_actions,
                                          double epsilon, Rng& rng) = 0;

  virtual TrainStats train_step(const ReplayBuffer& buffer, Rng& rng) = 0;

  // Loss and gradient evaluation for one explicit minibatch, with no
  // optimizer or target-net side effects.  Recurrent learners treat idx as
  // one consecutive period starting from zero hidden state.
  virtual std::vector<ProbeGroup> probe(const ReplayBuffer& buffer,
                                        std::span<const std::size_t> idx) = 0;

  // Mean coef-weighted negative log-prob of the taken actions over the
  // minibatch; pure in the actor parameters.  Pairs with ProbeGroup::coef to
  // make the actor gradient finite-difference checkable.  Throws for
  // learners without an actor.
  virtual double actor_logprob_loss(const ReplayBuffer& buffer,
                                    std::span<const std::size_t> idx,
                                    std::span<const double> coef);

  // Clears recurrent execution state; no-op for feed-forward nets.
  virtual void reset_execution_state() {}

  virtual void save(neural::Checkpoint& ckpt) const = 0;
  // Restores everything save() wrote; shapes must match.
  virtual void load(const neural::Checkpoint& ckpt) = 0;
  // Restores only the nets select_actions needs.  With coordinate identity
  // encoding this lets a checkpoint trained on one grid drive another.
  virtual void load_policy(const neural::Checkpoint& ckpt) = 0;

 protected:
  Learner(const LearnerConfig& cfg, const sim::RoadNetwork& net);

  // Rejects checkpoints whose algorithm, net style, or identity encoding is
  // incompatible with this learner; policy-only loads across grid sizes are
  // allowed when the identity encoding is size-independent.
  void check_compat(const neural::Checkpoint& ckpt, bool policy_only) const;

  // Fills the checkpoint's identity fields (algorithm, grid shape, identity
  // encoding, net style); callers add run provenance (seed, config hash).
  void stamp(neural::Checkpoint& ckpt) const;

  LearnerConfig cfg_;
  InputEncoder enc_;
  std::vector<double> weights_;
};

}  // namespace gridlight::algo
