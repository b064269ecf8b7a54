#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gridlight/algo/learner.hpp"
#include "gridlight/sim/world.hpp"

namespace gridlight::harness {

// Demand over one time window, given per line: one rate per horizontal road
// (row order, south to north) and one per vertical road (column order, west
// to east).  Both directed routes of a line receive the stated rate.
struct FlowLines {
  long start_s = 0;
  long end_s = 0;
  std::vector<double> horizontal;  // veh/h, one per row
  std::vector<double> vertical;    // veh/h, one per column
};

// Everything one run needs, parsed from a sectioned key = value file.
struct RunConfig {
  // [network]
  int rows = 1;
  int cols = 1;
  double edge_length = 400.0;

  // [flow]
  double enter_speed = 10.0;
  std::vector<FlowLines> flow;  // empty = zero demand

  // [run]
  std::uint64_t seed = 1;
  long horizon_s = 12000;        // total simulated seconds
  long warmup_s = 1000;          // random policy populates the network
  long train_period_s = 400;
  long eval_period_s = 400;
  long decision_interval_s = 5;  // also the reward window length
  long eval_tail_s = 200;        // recorded suffix of each evaluation period
  std::size_t replay_capacity = 1000;
  double epsilon0 = 0.9;
  double epsilon_decay = 0.995;  // applied once per cycle, fixed within one
  double eval_epsilon = 0.0;     // exploration during evaluation windows
  std::string out_dir = "out";

  // [learner]
  algo::LearnerConfig learner;

  int agent_count() const { return rows * cols; }
  long cycle_len_s() const { return train_period_s + eval_period_s; }
  long cycles() const { return (horizon_s - warmup_s) / cycle_len_s(); }

  // Expands per-line rates to the simulator's per-route schedule.
  sim::FlowProgram flow_program() const;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  // Additionally requires the horizon to cover warmup plus one full
  // train/eval cycle (frozen-policy runs have no such constraint).
  void validate_training() const;
};

RunConfig parse_config(const std::string& path);
// `origin` only labels error messages.
RunConfig parse_config_text(std::string_view text, const std::string& origin);

// Canonical serialization: fixed section and key order, shortest round-trip
// numbers.  Parsing it back reproduces the config byte for byte.
std::string config_echo(const RunConfig& cfg);

// Hash of the canonical form minus seed and output directory, so runs that
// differ only in where they write or which seed they draw share a hash.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace gridlight::harness
