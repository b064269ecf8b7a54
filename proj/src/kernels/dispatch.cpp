#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridlight/kernels/kernels.hpp"

namespace gridlight::kernels {

namespace scalar {
extern const Backend kBackend;
}
namespace avx2 {
extern const Backend kBackend;
}
namespace avx512 {
extern const Backend kBackend;
}

namespace {

bool cpu_has(const std::string& name) {
  if (name == "scalar") return true;
  if (name == "avx2") {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }
  if (name == "avx512") return __builtin_cpu_supports("avx512f");
  return false;
}

const Backend* by_name(const std::string& name) {
  if (name == "scalar") return &scalar::kBackend;
  if (name == "avx2") return &avx2::kBackend;
  if (name == "avx512") return &avx512::kBackend;
  return nullptr;
}

const Backend* pick_default() {
  if (const char* env = std::getenv("GRIDLIGHT_KERNELS")) {
    const Backend* b = by_name(env);
    if (b == nullptr) {
      throw std::invalid_argument(
          std::string("GRIDLIGHT_KERNELS: unknown backend '") + env + "'");
    }
    if (!cpu_has(b->name)) {
      throw std::runtime_error(std::string("GRIDLIGHT_KERNELS: CPU lacks ") +
                               b->name);
    }
    return b;
  }
  if (cpu_has("avx512")) return &avx512::kBackend;
  if (cpu_has("avx2")) return &avx2::kBackend;
  return &scalar::kBackend;
}

const Backend*& current_slot() {
  static const Backend* current = pick_default();
  return current;
}

}  // namespace

const Backend& backend() { return *current_slot(); }

void select(const std::string& name) {
  const Backend* b = by_name(name);
  if (b == nullptr) {
    throw std::invalid_argument("unknown kernel backend '" + name + "'");
  }
  if (!cpu_has(name)) {
    throw std::runtime_error("CPU does not support kernel backend '" + name +
                             "'");
  }
  current_slot() = b;
}

std::vector<std::string> available() {
  std::vector<std::string> out = {"scalar"};
  if (cpu_has("avx2")) out.push_back("avx2");
  if (cpu_has("avx512")) out.push_back("avx512");
  return out;
}

}  // namespace gridlight::kernels
