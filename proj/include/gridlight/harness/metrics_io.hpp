#pragma once

#include <string>
#include <vector>

#include "gridlight/harness/config.hpp"

namespace gridlight::harness {

// One evaluation decision step.  `window` is the train/eval cycle index for
// training runs and the flow-period index for frozen-policy runs; `epsilon`
// is the behavior-policy exploration rate of that cycle (0 when no behavior
// policy exists).  Aggregates are per-intersection per-second means over the
// decision window just simulated.
struct MetricRecord {
  long step = 0;  // seconds since run start, at the window's opening
  int window = 0;
  double epsilon = 0.0;
  double global_reward = 0.0;
  std::vector<double> rewards;  // per agent
  double mean_queue = 0.0;
  double mean_wait = 0.0;
  double mean_delay = 0.0;
  std::vector<int> phases;  // committed axis per light: 0 = E-W, 1 = N-S
};

// One training step (losses are means over its minibatches; the consistency
// term is reported before its weight is applied).
struct TrainRecord {
  long step = 0;
  int cycle = 0;
  double epsilon = 0.0;
  double loss_q = 0.0;
  double loss_aux = 0.0;
  double loss_reg = 0.0;
  int minibatches = 0;
};

// CSV writers: header plus one row per record, numbers in shortest
// round-trip form, so equal records give byte-equal files.  `window_label`
// names the second column ("cycle" or "period").  `agents` fixes the schema
// width even when records are empty.
void write_metrics_csv(const std::vector<MetricRecord>& records, int agents,
                       const std::string& window_label,
                       const std::string& path);
void write_losses_csv(const std::vector<TrainRecord>& records,
                      const std::string& path);

// Exact inverses of the writers (used by tooling and the test suite).
std::vector<MetricRecord> read_metrics_csv(const std::string& path);
std::vector<TrainRecord> read_losses_csv(const std::string& path);

// Key = value run provenance: command, revision, seed, config hash, wall
// time, followed by the canonical config echo.  Extra lines let callers
// record inputs such as checkpoint paths.
void write_manifest(const RunConfig& cfg, const std::string& command,
                    double wall_seconds,
                    const std::vector<std::string>& extra_lines,
                    const std::string& path);

// Build revision baked in at compile time.
std::string revision_string();

}  // namespace gridlight::harness
