#include "gridlight/agentio/reward.hpp"

#include <stdexcept>

namespace gridlight::agentio {

double individual_reward(const sim::WindowFeatures& f) {
  return -0.5 * f.queue_sum - 0.5 * f.wait_sum - 0.5 * f.delay_sum -
         0.25 * f.emergency_stops - 1.0 * f.phase_changes +
         1.0 * f.throughput;
}

std::vector<double> individual_rewards(const sim::World& world) {
  std::vector<double> r;
  r.reserve(world.window().size());
  for (const sim::WindowFeatures& f : world.window()) {
    r.push_back(individual_reward(f));
  }
  return r;
}

double global_reward(std::span<const double> rewards,
                     std::span<const double> weights) {
  if (rewards.size() != weights.size()) {
    throw std::invalid_argument("global_reward: size mismatch");
  }
  double g = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    g += weights[i] * rewards[i];
  }
  return g;
}

}  // namespace gridlight::agentio
