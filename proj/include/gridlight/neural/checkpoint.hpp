#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gridlight/neural/matrix.hpp"

namespace gridlight::neural {

// Self-describing binary parameter snapshot: a magic string, a JSON header
// (algorithm tag, config hash, seed, grid shape, identity encoding, tensor
// table), then raw little-endian f64 tensor data in header order.  Writing
// the same state twice produces identical bytes.
struct Checkpoint {
  std::string algo;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int rows = 0;
  int cols = 0;
  std::string identity = "coords";  // agent identity encoding of the nets
  bool rnn = false;

  std::vector<std::pair<std::string, Matrix>> tensors;  // insertion order

  void add(const std::string& name, const Matrix& m);
  const Matrix* find(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace gridlight::neural
