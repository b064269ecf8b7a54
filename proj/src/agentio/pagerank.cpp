#include "gridlight/agentio/pagerank.hpp"

#include <cmath>
#include <cstddef>
#include <iostream>
#include <stdexcept>

namespace gridlight::agentio {

namespace {

bool is_connected(const std::vector<std::vector<int>>& adj) {
  if (adj.empty()) return true;
  std::vector<char> seen(adj.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        reached += 1;
        stack.push_back(v);
      }
    }
  }
  return reached == adj.size();
}

}  // namespace

std::vector<double> pagerank_weights(
    const std::vector<std::vector<int>>& adjacency, double damping) {
  const std::size_t n = adjacency.size();
  if (n == 0) throw std::invalid_argument("pagerank_weights: empty graph");
  if (damping <= 0.0 || damping >= 1.0) {
    throw std::invalid_argument("pagerank_weights: damping must be in (0,1)");
  }
  if (!is_connected(adjacency)) {
    std::cerr << "warning: pagerank_weights on a disconnected graph\n";
  }

  const double uniform = 1.0 / static_cast<double>(n);
  std::vector<double> x(n, uniform), next(n, 0.0);
  for (int round = 0; round < 1000; ++round) {
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (adjacency[i].empty()) dangling += x[i];
    }
    const double base = (1.0 - damping) * uniform + damping * dangling * uniform;
    next.assign(n, base);
    for (std::size_t i = 0; i < n; ++i) {
      if (adjacency[i].empty()) continue;
      const double share =
          damping * x[i] / static_cast<double>(adjacency[i].size());
      for (int j : adjacency[i]) next[j] += share;
    }
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) l1 += std::abs(next[i] - x[i]);
    x.swap(next);
    if (l1 < 1e-10) break;
  }
  return x;
}

std::vector<double> pagerank_weights(const sim::RoadNetwork& net,
                                     double damping) {
  std::vector<std::vector<int>> adj;
  adj.reserve(net.intersections.size());
  for (const sim::IntersectionSpec& x : net.intersections) {
    adj.push_back(x.neighbors);
  }
  return pagerank_weights(adj, damping);
}

}  // namespace gridlight::agentio
