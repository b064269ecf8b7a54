#pragma once

#include <vector>

#include "gridlight/sim/network.hpp"

namespace gridlight::agentio {

// PageRank with uniform teleport over an undirected adjacency list: power
// iteration until the L1 change drops below 1e-10 (at most 1000 rounds).
// Dangling nodes donate their mass uniformly.  Disconnected graphs still
// converge thanks to the teleport term but draw a warning on stderr.
// The result sums to 1.
std::vector<double> pagerank_weights(
    const std::vector<std::vector<int>>& adjacency, double damping = 0.85);

// Weights over the intersection graph, indexed by intersection id.
std::vector<double> pagerank_weights(const sim::RoadNetwork& net,
                                     double damping = 0.85);

}  // namespace gridlight::agentio
