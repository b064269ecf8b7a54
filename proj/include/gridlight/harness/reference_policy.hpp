#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gridlight/algo/learner.hpp"
#include "gridlight/core/rng.hpp"
#include "gridlight/sim/world.hpp"

namespace gridlight::harness {

// Anything that can pick one keep/switch action per intersection for the
// decision at the world's current time.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<int> act(const sim::World& world,
                               std::span<const std::vector<double>> obs,
                               std::span<const int> prev_actions,
                               Rng& rng) = 0;
};

// "static": every light switches whenever the wall clock hits a multiple of
// 30 s.  "random": every light draws keep/switch uniformly each decision.
// Throws std::invalid_argument for other kinds.
std::unique_ptr<Policy> make_reference_policy(const std::string& kind);
bool is_reference_kind(const std::string& kind);

// Frozen learner driven at a fixed exploration rate; value-based learners
// act greedily at epsilon = 0, actor learners sample their softmax policy.
class LearnerPolicy : public Policy {
 public:
  LearnerPolicy(algo::Learner& learner, double epsilon)
      : learner_(&learner), epsilon_(epsilon) {}

  void set_epsilon(double e) { epsilon_ = e; }

  std::vector<int> act(const sim::World& world,
                       std::span<const std::vector<double>> obs,
                       std::span<const int> prev_actions, Rng& rng) override;

 private:
  algo::Learner* learner_;
  double epsilon_;
};

}  // namespace gridlight::harness
