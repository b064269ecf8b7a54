#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "gridlight/core/rng.hpp"

namespace gridlight::algo {

// One decision-step transition for all agents.  Observations are stored raw
// (unscaled); encoders rescale at batch-assembly time.
struct Experience {
  std::vector<std::vector<double>> obs;       // N x 19
  std::vector<std::vector<double>> next_obs;  // N x 19
  std::vector<int> prev_actions;              // actions taken at the previous decision
  std::vector<int> actions;
  std::vector<double> rewards;                // per-agent
  double global_reward = 0.0;
  long long position = 0;                     // decision index within the run
};

// FIFO replay buffer with bounded capacity.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(Experience e);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Experience& operator[](std::size_t i) const { return data_[i]; }

  // Uniform sample with replacement.
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

  // Start index of a uniformly chosen run of `length` buffer-consecutive
  // entries whose positions are consecutive too (no seam from a buffer that
  // spans separate runs).  Returns false if no such run exists.
  bool sample_run(std::size_t length, Rng& rng, std::size_t& start) const;

 private:
  std::size_t capacity_;
  std::deque<Experience> data_;
};

}  // namespace gridlight::algo
