#include "gridlight/harness/reference_policy.hpp"

#include <stdexcept>

namespace gridlight::harness {

namespace {

class StaticPolicy : public Policy {
 public:
  std::vector<int> act(const sim::World& world,
                       std::span<const std::vector<double>>,
                       std::span<const int>, Rng&) override {
    long long sec = world.seconds();
    int a = (sec > 0 && sec % 30 == 0) ? 1 : 0;
    return std::vector<int>(world.network().agent_count(), a);
  }
};

class RandomPolicy : public Policy {
 public:
  std::vector<int> act(const sim::World& world,
                       std::span<const std::vector<double>>,
                       std::span<const int>, Rng& rng) override {
    std::vector<int> actions(world.network().agent_count());
    for (int& a : actions) a = rng.next_int(2);
    return actions;
  }
};

}  // namespace

std::unique_ptr<Policy> make_reference_policy(const std::string& kind) {
  if (kind == "static") return std::make_unique<StaticPolicy>();
  if (kind == "random") return std::make_unique<RandomPolicy>();
  throw std::invalid_argument("unknown reference policy '" + kind +
                              "' (expected static or random)");
}

bool is_reference_kind(const std::string& kind) {
  return kind == "static" || kind == "random";
}

std::vector<int> LearnerPolicy::act(const sim::World&,
                                    std::span<const std::vector<double>> obs,
                                    std::span<const int> prev_actions,
                                    Rng& rng) {
  return learner_->select_actions(obs, prev_actions, epsilon_, rng);
}

}  // namespace gridlight::harness
