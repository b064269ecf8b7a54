#pragma once

// Shared machinery for the learner implementations: minibatch assembly,
// greedy/sampling policies, the per-agent TD arithmetic, and the
// online/target/optimizer bundle every algorithm builds its heads from.

#include <span>
#include <string>
#include <vector>

#include "gridlight/algo/encoding.hpp"
#include "gridlight/algo/learner.hpp"
#include "gridlight/algo/replay.hpp"
#include "gridlight/core/rng.hpp"
#include "gridlight/neural/checkpoint.hpp"
#include "gridlight/neural/gru.hpp"
#include "gridlight/neural/mlp.hpp"
#include "gridlight/neural/optim.hpp"

namespace gridlight::algo::detail {

using neural::GradBundle;
using neural::Matrix;

// Minibatch rows laid out (sample, agent) sample-major: row = b * n + agent.
struct LocalBatch {
  std::size_t b = 0, n = 0;
  Matrix x, x_next;            // per-agent inputs at t and t+1
  std::vector<int> act;        // action taken, one per row
  std::vector<double> reward;  // per-agent reward, one per row
  std::vector<double> rg;      // global reward, one per sample
};

LocalBatch assemble_local(const ReplayBuffer& buffer,
                          std::span<const std::size_t> idx,
                          const InputEncoder& enc);

// Per-agent input rows for one experience (rows [row0, row0+n) of out).
void fill_local_rows(const Experience& e, const InputEncoder& enc, bool next,
                     Matrix& out, std::size_t row0);

// Ties resolve to the lowest index, i.e. action 0 = keep the current phase.
int argmax_row(std::span<const double> q);

int eps_greedy_row(std::span<const double> q, double epsilon, Rng& rng);

// Samples from row probabilities (expected to sum to 1).
int sample_row(std::span<const double> p, Rng& rng);

// delta[i] = r[i] + gamma * max_a qt_next(i, a) - q(i, act[i]); returns the
// mean half-squared TD loss (1 / (b * n) normalization).
double local_td_delta(const Matrix& q, const Matrix& qt_next,
                      std::span<const int> act, std::span<const double> reward,
                      double gamma, std::vector<double>& delta);

// Output gradient of the per-agent TD head.  The consistency coupling enters
// through lambda, the agent blend weights k, and the per-sample residual z2;
// independent Q-learning runs the identical arithmetic with lambda = 0 and
// zero k/z2, which keeps its parameter updates bit-equal to the coupled
// objective at lambda = 0.
void local_td_out_grad(std::span<const double> delta, std::span<const int> act,
                       std::size_t b, std::size_t n, double lambda,
                       std::span<const double> k, std::span<const double> z2,
                       Matrix& dy);

void save_net(neural::Checkpoint& ckpt, const std::string& prefix,
              const neural::ParamOwner& net);
void load_net(neural::ParamOwner& net, const neural::Checkpoint& ckpt,
              const std::string& prefix);

// One shared-parameter head: a feed-forward or recurrent online net, an
// optional target twin (initialized as a copy), and its optimizer.
struct LocalHead {
  LocalHead(std::size_t in_dim, std::size_t out_dim, const LearnerConfig& cfg,
            double lr, bool recurrent, bool with_target, Rng rng);

  neural::ParamOwner& online();
  const neural::ParamOwner& online() const;
  neural::ParamOwner& target_net();
  const neural::ParamOwner& target_net() const;

  // Execution-time forward for one decision (rows = agents); advances the
  // recurrent state when the head is recurrent.
  Matrix forward_exec(const Matrix& x);
  void reset_exec();
  void soft_update_target(double tau);
  void adam_step(const GradBundle& g);

  void save(neural::Checkpoint& ckpt, const std::string& prefix) const;
  void load(const neural::Checkpoint& ckpt, const std::string& prefix);
  void load_online(const neural::Checkpoint& ckpt, const std::string& prefix);

  bool rnn = false;
  bool has_target = true;
  neural::Mlp mlp, mlp_target;
  neural::GruNet gru, gru_target;
  neural::Adam adam;
  Matrix h_exec;  // agents x hidden recurrent execution state
};

// Encodes all agents' observations into one exec-input matrix.
Matrix exec_input(const InputEncoder& enc,
                  std::span<const std::vector<double>> obs,
                  std::span<const int> prev_actions);

// Epsilon-greedy over a value head; the behavior policy of every
// value-based learner.
std::vector<int> value_select(LocalHead& head, const InputEncoder& enc,
                              std::span<const std::vector<double>> obs,
                              std::span<const int> prev_actions, double epsilon,
                              Rng& rng);

// Softmax sampling over an actor head.
std::vector<int> actor_select(LocalHead& head, const InputEncoder& enc,
                              std::span<const std::vector<double>> obs,
                              std::span<const int> prev_actions, Rng& rng);

Matrix copy_rows(const Matrix& src, std::size_t row0, std::size_t count);

// Pure surrogate evaluation used by the finite-difference oracle: the mean
// coef-weighted negative log-prob of the taken actions under the actor head.
// Shared by both actor-based learners; recurrent actors run the minibatch as
// one consecutive period from zero hidden state.
double logprob_surrogate(LocalHead& actor, const InputEncoder& enc,
                         const LearnerConfig& cfg, const ReplayBuffer& buffer,
                         std::span<const std::size_t> idx,
                         std::span<const double> coef);

// Factories, one per algorithm.
std::unique_ptr<Learner> make_idqn(const LearnerConfig&, const sim::RoadNetwork&, Rng& init);
std::unique_ptr<Learner> make_iac(const LearnerConfig&, const sim::RoadNetwork&, Rng& init);
std::unique_ptr<Learner> make_coma(const LearnerConfig&, const sim::RoadNetwork&, Rng& init);
std::unique_ptr<Learner> make_vdn(const LearnerConfig&, const sim::RoadNetwork&, Rng& init);
std::unique_ptr<Learner> make_qmix(const LearnerConfig&, const sim::RoadNetwork&, Rng& init);
std::unique_ptr<Learner> make_qcombo(const LearnerConfig&, const sim::RoadNetwork&, Rng& init);

}  // namespace gridlight::algo::detail
