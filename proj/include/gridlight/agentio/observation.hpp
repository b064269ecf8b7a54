#pragma once

#include <vector>

#include "gridlight/sim/world.hpp"

namespace gridlight::agentio {

// Per-intersection observation layout: queue count, vehicle count, mean
// waiting minutes and mean delay for the four approaches (N, E, S, W order),
// then the committed phase one-hot (EW, NS) and the phase duration in
// seconds.
inline constexpr int kObsDim = 4 + 4 + 4 + 4 + 2 + 1;

std::vector<double> observe(const sim::World& world, int intersection);

// Concatenation of every intersection's observation in id order
// (row-major by grid position); dimension kObsDim * N.
std::vector<double> global_state(const sim::World& world);

}  // namespace gridlight::agentio
