#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gridlight/algo/learner.hpp"
#include "gridlight/harness/config.hpp"
#include "gridlight/harness/metrics_io.hpp"
#include "gridlight/harness/reference_policy.hpp"

namespace gridlight::harness {

struct TrainResult {
  std::vector<MetricRecord> metrics;  // evaluation-tail records, all cycles
  std::vector<TrainRecord> losses;    // one per training step
  std::vector<std::string> checkpoints;  // per-cycle paths, in order
  std::string final_checkpoint;          // copy of the last cycle's state
};

// Full schedule: `warmup` seconds under uniform random actions to fill the
// roads, then alternating train/eval periods until the last full cycle fits
// inside the horizon (the remainder is dropped).  One training step per
// decision during training periods; parameters frozen during evaluation;
// records cover each evaluation period's tail.  Writes metrics.csv,
// losses.csv, per-cycle checkpoints and a manifest into cfg.out_dir.
TrainResult run_training(const RunConfig& cfg);

// Same schedule and outputs driven by a fixed reference policy ("static" or
// "random"): no learning, no checkpoints, losses file left out.
std::vector<MetricRecord> run_reference(const RunConfig& cfg,
                                        const std::string& kind);

struct EvalResult {
  // One bucket per flow period (boundaries at the flow intervals' start
  // times); flat order matches simulation time.
  std::vector<std::vector<MetricRecord>> periods;
};

// Frozen-policy run over [0, horizon) from an empty road network, recording
// every decision.  Writes metrics_period<k>.csv per flow period plus a
// manifest into cfg.out_dir; `manifest_extra` records the policy's origin.
EvalResult run_policy(const RunConfig& cfg, Policy& policy,
                      const std::string& command,
                      const std::vector<std::string>& manifest_extra);

// Builds a learner for cfg's network, loads only the execution nets from
// the checkpoint (cross-grid loads need coordinate identities), and returns
// it ready for run_policy.
std::unique_ptr<algo::Learner> load_policy_learner(const RunConfig& cfg,
                                                   const std::string& ckpt_path);

}  // namespace gridlight::harness
