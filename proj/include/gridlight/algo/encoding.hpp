#pragma once

#include <span>
#include <string>
#include <vector>

#include "gridlight/sim/network.hpp"

namespace gridlight::algo {

inline constexpr int kNumActions = 2;  // 0 = keep phase, 1 = switch

// How an agent's identity enters shared-parameter networks: two normalized
// grid coordinates (fixed size, survives transfer to other grid sizes) or a
// one-hot label of length N.
enum class IdentityEncoding { coords, onehot };

IdentityEncoding parse_identity(const std::string& name);
std::string identity_name(IdentityEncoding id);

// Builds network inputs from raw observations, actions, and agent identity.
// Raw observation components are rescaled to comparable magnitudes:
// queue/10, count/10, waiting minutes, delay, phase one-hot, duration/60.
class InputEncoder {
 public:
  InputEncoder(int rows, int cols, IdentityEncoding identity);

  int agent_count() const { return rows_ * cols_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int identity_dim() const;
  // observation (19) + previous action one-hot + identity
  int local_dim() const;
  // scaled global state (19 N)
  int state_dim() const;
  // scaled global state (19 N) + joint-action one-hots (2 N)
  int global_dim() const;
  // {s, other agents' actions, one-hot label, own observation}
  int coma_critic_dim() const;

  // Scaled copy of one 19-component observation.
  void scale_obs(std::span<const double> obs, std::span<double> out) const;

  void encode_local(std::span<const double> obs, int prev_action, int agent,
                    std::span<double> out) const;
  void encode_state(std::span<const std::vector<double>> obs,
                    std::span<double> out) const;
  void encode_global(std::span<const std::vector<double>> obs,
                     std::span<const int> joint_action,
                     std::span<double> out) const;
  void encode_coma_critic(std::span<const std::vector<double>> obs,
                          std::span<const int> joint_action, int agent,
                          std::span<double> out) const;

  IdentityEncoding identity() const { return identity_; }

 private:
  void write_identity(int agent, std::span<double> out) const;

  int rows_, cols_;
  IdentityEncoding identity_;
};

}  // namespace gridlight::algo
