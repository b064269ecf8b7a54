#include "gridlight/algo/encoding.hpp"

#include <cassert>
#include <stdexcept>

#include "gridlight/agentio/observation.hpp"

namespace gridlight::algo {

using agentio::kObsDim;

IdentityEncoding parse_identity(const std::string& name) {
  if (name == "coords") return IdentityEncoding::coords;
  if (name == "onehot") return IdentityEncoding::onehot;
  throw std::invalid_argument("unknown identity encoding: " + name);
}

std::string identity_name(IdentityEncoding id) {
  return id == IdentityEncoding::coords ? "coords" : "onehot";
}

InputEncoder::InputEncoder(int rows, int cols, IdentityEncoding identity)
    : rows_(rows), cols_(cols), identity_(identity) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("encoder: grid must be at least 1x1");
}

int InputEncoder::identity_dim() const {
  return identity_ == IdentityEncoding::coords ? 2 : agent_count();
}

int InputEncoder::local_dim() const { return kObsDim + kNumActions + identity_dim(); }

int InputEncoder::state_dim() const { return agent_count() * kObsDim; }

int InputEncoder::global_dim() const { return agent_count() * (kObsDim + kNumActions); }

int InputEncoder::coma_critic_dim() const {
  return agent_count() * (kObsDim + kNumActions + 1) + kObsDim;
}

void InputEncoder::scale_obs(std::span<const double> obs, std::span<double> out) const {
  assert(obs.size() == kObsDim && out.size() >= kObsDim);
  for (int i = 0; i < 4; ++i) out[i] = obs[i] / 10.0;        // queue counts
  for (int i = 4; i < 8; ++i) out[i] = obs[i] / 10.0;        // vehicle counts
  for (int i = 8; i < 16; ++i) out[i] = obs[i];              // waiting, delay
  out[16] = obs[16];                                         // phase one-hot
  out[17] = obs[17];
  out[18] = obs[18] / 60.0;                                  // phase duration
}

void InputEncoder::write_identity(int agent, std::span<double> out) const {
  if (identity_ == IdentityEncoding::coords) {
    const int row = agent / cols_;
    const int col = agent % cols_;
    out[0] = rows_ > 1 ? static_cast<double>(row) / (rows_ - 1) : 0.5;
    out[1] = cols_ > 1 ? static_cast<double>(col) / (cols_ - 1) : 0.5;
  } else {
    for (int i = 0; i < agent_count(); ++i) out[i] = 0.0;
    out[agent] = 1.0;
  }
}

void InputEncoder::encode_local(std::span<const double> obs, int prev_action, int agent,
                                std::span<double> out) const {
  assert(static_cast<int>(out.size()) == local_dim());
  scale_obs(obs, out);
  out[kObsDim] = prev_action == 0 ? 1.0 : 0.0;
  out[kObsDim + 1] = prev_action == 1 ? 1.0 : 0.0;
  write_identity(agent, out.subspan(kObsDim + kNumActions));
}

void InputEncoder::encode_state(std::span<const std::vector<double>> obs,
                                std::span<double> out) const {
  const int n = agent_count();
  assert(static_cast<int>(obs.size()) == n);
  assert(static_cast<int>(out.size()) >= state_dim());
  for (int i = 0; i < n; ++i) scale_obs(obs[i], out.subspan(i * kObsDim));
}

void InputEncoder::encode_global(std::span<const std::vector<double>> obs,
                                 std::span<const int> joint_action,
                                 std::span<double> out) const {
  const int n = agent_count();
  assert(static_cast<int>(joint_action.size()) == n);
  assert(static_cast<int>(out.size()) == global_dim());
  encode_state(obs, out);
  double* acts = out.data() + n * kObsDim;
  for (int i = 0; i < n * kNumActions; ++i) acts[i] = 0.0;
  for (int i = 0; i < n; ++i) acts[i * kNumActions + joint_action[i]] = 1.0;
}

void InputEncoder::encode_coma_critic(std::span<const std::vector<double>> obs,
                                      std::span<const int> joint_action, int agent,
                                      std::span<double> out) const {
  const int n = agent_count();
  assert(static_cast<int>(out.size()) == coma_critic_dim());
  encode_state(obs, out);
  double* acts = out.data() + n * kObsDim;
  for (int i = 0; i < n * kNumActions; ++i) acts[i] = 0.0;
  for (int i = 0; i < n; ++i)
    if (i != agent) acts[i * kNumActions + joint_action[i]] = 1.0;
  double* label = acts + n * kNumActions;
  for (int i = 0; i < n; ++i) label[i] = i == agent ? 1.0 : 0.0;
  scale_obs(obs[agent], out.subspan(n * (kObsDim + kNumActions + 1)));
}

}  // namespace gridlight::algo
