#include "gridlight/algo/replay.hpp"

#include <stdexcept>
#include <utility>

namespace gridlight::algo {

void ReplayBuffer::push(Experience e) {
  if (capacity_ == 0) throw std::invalid_argument("replay: capacity must be positive");
  if (data_.size() == capacity_) data_.pop_front();
  data_.push_back(std::move(e));
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
  if (data_.empty()) throw std::logic_error("replay: sampling from empty buffer");
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = static_cast<std::size_t>(rng.next_int(static_cast<int>(data_.size())));
  return out;
}

bool ReplayBuffer::sample_run(std::size_t length, Rng& rng, std::size_t& start) const {
  if (length == 0 || data_.size() < length) return false;
  std::vector<std::size_t> starts;
  std::size_t run_begin = 0;
  for (std::size_t i = 1; i <= data_.size(); ++i) {
    const bool seam = i == data_.size() || data_[i].position != data_[i - 1].position + 1;
    if (seam) {
      for (std::size_t s = run_begin; s + length <= i; ++s) starts.push_back(s);
      run_begin = i;
    }
  }
  if (starts.empty()) return false;
  start = starts[static_cast<std::size_t>(rng.next_int(static_cast<int>(starts.size())))];
  return true;
}

}  // namespace gridlight::algo
