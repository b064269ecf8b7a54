#pragma once

#include <span>
#include <vector>

#include "gridlight/sim/world.hpp"

namespace gridlight::agentio {

// Weighted linear combination of one intersection's 5 s window features:
// -0.5*queue -0.5*waiting -0.5*delay -0.25*emergency_stops -1*phase_changes
// +1*throughput.
double individual_reward(const sim::WindowFeatures& f);

// All intersections' rewards for the window just ended, in id order.
std::vector<double> individual_rewards(const sim::World& world);

// R^g = sum_n k_n * r_n.  Throws std::invalid_argument on size mismatch.
double global_reward(std::span<const double> rewards,
                     std::span<const double> weights);

}  // namespace gridlight::agentio
