#include "gridlight/harness/metrics_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gridlight/core/text.hpp"

#ifndef GRIDLIGHT_GIT_REV
#define GRIDLIGHT_GIT_REV "unknown"
#endif

namespace gridlight::harness {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

void write_metrics_csv(const std::vector<MetricRecord>& records, int agents,
                       const std::string& window_label,
                       const std::string& path) {
  std::ofstream out = open_out(path);
  out << "step," << window_label << ",epsilon,global_reward";
  for (int i = 0; i < agents; ++i) out << ",reward_" << i;
  out << ",mean_queue,mean_wait,mean_delay";
  for (int i = 0; i < agents; ++i) out << ",phase_" << i;
  out << "\n";
  for (const MetricRecord& r : records) {
    if (static_cast<int>(r.rewards.size()) != agents ||
        static_cast<int>(r.phases.size()) != agents)
      throw std::invalid_argument("metric record width does not match agents");
    out << r.step << "," << r.window << "," << format_double(r.epsilon) << ","
        << format_double(r.global_reward);
    for (double v : r.rewards) out << "," << format_double(v);
    out << "," << format_double(r.mean_queue) << ","
        << format_double(r.mean_wait) << "," << format_double(r.mean_delay);
    for (int p : r.phases) out << "," << p;
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_losses_csv(const std::vector<TrainRecord>& records,
                      const std::string& path) {
  std::ofstream out = open_out(path);
  out << "step,cycle,epsilon,loss_q,loss_aux,loss_reg,minibatches\n";
  for (const TrainRecord& r : records) {
    out << r.step << "," << r.cycle << "," << format_double(r.epsilon) << ","
        << format_double(r.loss_q) << "," << format_double(r.loss_aux) << ","
        << format_double(r.loss_reg) << "," << r.minibatches << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<MetricRecord> read_metrics_csv(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty metrics file: " + path);
  std::vector<std::string> header = split(lines[0], ',');
  int agents = 0;
  for (const std::string& h : header)
    if (h.rfind("reward_", 0) == 0) ++agents;
  std::size_t want = 7 + 2 * static_cast<std::size_t>(agents);
  std::vector<MetricRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> f = split(lines[i], ',');
    if (f.size() != want)
      throw std::runtime_error(path + ": row has " + std::to_string(f.size()) +
                               " fields, expected " + std::to_string(want));
    MetricRecord r;
    std::size_t k = 0;
    r.step = parse_long(f[k++]);
    r.window = static_cast<int>(parse_long(f[k++]));
    r.epsilon = parse_double(f[k++]);
    r.global_reward = parse_double(f[k++]);
    for (int a = 0; a < agents; ++a) r.rewards.push_back(parse_double(f[k++]));
    r.mean_queue = parse_double(f[k++]);
    r.mean_wait = parse_double(f[k++]);
    r.mean_delay = parse_double(f[k++]);
    for (int a = 0; a < agents; ++a)
      r.phases.push_back(static_cast<int>(parse_long(f[k++])));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TrainRecord> read_losses_csv(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty losses file: " + path);
  std::vector<TrainRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> f = split(lines[i], ',');
    if (f.size() != 7)
      throw std::runtime_error(path + ": row has " + std::to_string(f.size()) +
                               " fields, expected 7");
    TrainRecord r;
    r.step = parse_long(f[0]);
    r.cycle = static_cast<int>(parse_long(f[1]));
    r.epsilon = parse_double(f[2]);
    r.loss_q = parse_double(f[3]);
    r.loss_aux = parse_double(f[4]);
    r.loss_reg = parse_double(f[5]);
    r.minibatches = static_cast<int>(parse_long(f[6]));
    out.push_back(r);
  }
  return out;
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    double wall_seconds,
                    const std::vector<std::string>& extra_lines,
                    const std::string& path) {
  std::ofstream out = open_out(path);
  out << "command = " << command << "\n";
  out << "revision = " << revision_string() << "\n";
  out << "seed = " << cfg.seed << "\n";
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  out << "config_hash = " << hex << "\n";
  out << "wall_seconds = " << format_double(wall_seconds) << "\n";
  for (const std::string& line : extra_lines) out << line << "\n";
  out << "\n# effective configuration\n" << config_echo(cfg);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string revision_string() { return GRIDLIGHT_GIT_REV; }

}  // namespace gridlight::harness
