#include "gridlight/neural/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gridlight::neural {

namespace {
constexpr char kMagic[8] = {'G', 'L', 'C', 'K', 'P', 'T', '0', '1'};

std::string hex_u64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return std::string(buf, 16);
}

std::uint64_t parse_hex_u64(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}
}  // namespace

void Checkpoint::add(const std::string& name, const Matrix& m) {
  tensors.emplace_back(name, m);
}

const Matrix* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return &m;
  }
  return nullptr;
}

void Checkpoint::save(const std::string& path) const {
  nlohmann::json meta;
  meta["algo"] = algo;
  meta["config_hash"] = hex_u64(config_hash);
  meta["seed"] = hex_u64(seed);
  meta["rows"] = rows;
  meta["cols"] = cols;
  meta["identity"] = identity;
  meta["rnn"] = rnn;
  auto table = nlohmann::json::array();
  for (const auto& [name, m] : tensors) {
    table.push_back({{"name", name},
                     {"rows", m.rows()},
                     {"cols", m.cols()}});
  }
  meta["tensors"] = table;
  const std::string header = meta.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t len = static_cast<std::uint32_t>(header.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, m] : tensors) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("short write to checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header(len, '\0');
  in.read(header.data(), len);
  if (!in) throw std::runtime_error("truncated checkpoint header: " + path);

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("bad checkpoint header: " + std::string(e.what()));
  }
  Checkpoint ck;
  ck.algo = meta.at("algo").get<std::string>();
  ck.config_hash = parse_hex_u64(meta.at("config_hash").get<std::string>());
  ck.seed = parse_hex_u64(meta.at("seed").get<std::string>());
  ck.rows = meta.at("rows").get<int>();
  ck.cols = meta.at("cols").get<int>();
  ck.identity = meta.at("identity").get<std::string>();
  ck.rnn = meta.at("rnn").get<bool>();
  for (const auto& entry : meta.at("tensors")) {
    Matrix m(entry.at("rows").get<std::size_t>(),
             entry.at("cols").get<std::size_t>());
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint data: " + path);
    ck.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(m));
  }
  return ck;
}

}  // namespace gridlight::neural
