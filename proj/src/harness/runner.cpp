#include "gridlight/harness/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <span>
#include <utility>

#include "gridlight/agentio/observation.hpp"
#include "gridlight/agentio/pagerank.hpp"
#include "gridlight/agentio/reward.hpp"
#include "gridlight/algo/replay.hpp"
#include "gridlight/neural/checkpoint.hpp"

namespace gridlight::harness {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::vector<double> blend_weights(const RunConfig& cfg,
                                  const sim::RoadNetwork& net) {
  if (!cfg.learner.agent_weights.empty()) return cfg.learner.agent_weights;
  return agentio::pagerank_weights(net);
}

std::vector<std::vector<double>> observe_all(const sim::World& world) {
  int n = world.network().agent_count();
  std::vector<std::vector<double>> obs(n);
  for (int i = 0; i < n; ++i) obs[i] = agentio::observe(world, i);
  return obs;
}

std::vector<int> committed_phases(const sim::World& world) {
  int n = world.network().agent_count();
  std::vector<int> phases(n);
  for (int i = 0; i < n; ++i)
    phases[i] = static_cast<int>(world.light(i).committed);
  return phases;
}

MetricRecord make_record(const sim::World& world, long step, int window,
                         double epsilon, std::span<const double> rewards,
                         double global_reward, std::span<const int> phases,
                         long window_s) {
  MetricRecord r;
  r.step = step;
  r.window = window;
  r.epsilon = epsilon;
  r.global_reward = global_reward;
  r.rewards.assign(rewards.begin(), rewards.end());
  r.phases.assign(phases.begin(), phases.end());
  double q = 0.0, wt = 0.0, dl = 0.0;
  for (const sim::WindowFeatures& f : world.window()) {
    q += f.queue_sum;
    wt += f.wait_sum;
    dl += f.delay_sum;
  }
  double denom = static_cast<double>(world.network().agent_count()) *
                 static_cast<double>(window_s);
  r.mean_queue = q / denom;
  r.mean_wait = wt / denom;
  r.mean_delay = dl / denom;
  return r;
}

std::string cycle_checkpoint_name(int cycle) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_cycle_%02d.bin", cycle);
  return buf;
}

void save_checkpoint(const algo::Learner& learner, const RunConfig& cfg,
                     const std::string& path) {
  neural::Checkpoint ckpt;
  learner.save(ckpt);
  ckpt.seed = cfg.seed;
  ckpt.config_hash = config_hash(cfg);
  ckpt.save(path);
}

// The alternating warmup/train/eval schedule shared by learning runs and
// reference-policy runs; `learner` and `fixed` are mutually exclusive.
TrainResult run_schedule(const RunConfig& cfg, algo::Learner* learner,
                         Policy* fixed, const std::string& command) {
  Clock::time_point t0 = Clock::now();
  fs::create_directories(cfg.out_dir);

  sim::RoadNetwork net =
      sim::RoadNetwork::build_grid(cfg.rows, cfg.cols, cfg.edge_length);
  sim::FlowProgram flow = cfg.flow_program();
  sim::World world(net);
  std::vector<double> weights =
      learner ? std::vector<double>(learner->agent_weights().begin(),
                                    learner->agent_weights().end())
              : blend_weights(cfg, net);

  Rng master(cfg.seed);
  Rng rng_behavior = master.fork("behavior");
  Rng rng_train = master.fork("train");
  Rng rng_eval = master.fork("eval");
  std::unique_ptr<Policy> warmup_policy = make_reference_policy("random");

  algo::ReplayBuffer buffer(cfg.replay_capacity);
  const long d = cfg.decision_interval_s;
  const long cycle_len = cfg.cycle_len_s();
  const long n_cycles = cfg.cycles();
  const long end = cfg.warmup_s + n_cycles * cycle_len;
  const int agents = net.agent_count();

  TrainResult result;
  std::vector<int> prev_actions(agents, 0);
  std::vector<std::vector<double>> obs = observe_all(world);

  for (long t = 0; t < end; t += d) {
    bool warmup = t < cfg.warmup_s;
    long cycle = warmup ? 0 : (t - cfg.warmup_s) / cycle_len;
    long off = warmup ? 0 : (t - cfg.warmup_s) % cycle_len;
    bool training = !warmup && off < cfg.train_period_s;
    bool tail = !warmup && off >= cycle_len - cfg.eval_tail_s;
    double eps_cycle =
        cfg.epsilon0 * std::pow(cfg.epsilon_decay, static_cast<double>(cycle));

    std::vector<int> actions;
    if (warmup) {
      actions = warmup_policy->act(world, obs, prev_actions, rng_behavior);
    } else if (learner) {
      actions = training ? learner->select_actions(obs, prev_actions,
                                                   eps_cycle, rng_behavior)
                         : learner->select_actions(obs, prev_actions,
                                                   cfg.eval_epsilon, rng_eval);
    } else {
      actions = fixed->act(world, obs, prev_actions, rng_behavior);
    }

    world.apply_actions(actions);
    world.advance_seconds(flow, static_cast<int>(d));
    std::vector<int> phases = committed_phases(world);

    std::vector<double> rewards = agentio::individual_rewards(world);
    double rg = agentio::global_reward(rewards, weights);
    std::vector<std::vector<double>> next_obs = observe_all(world);

    algo::Experience e;
    e.obs = obs;
    e.next_obs = next_obs;
    e.prev_actions = prev_actions;
    e.actions = actions;
    e.rewards = rewards;
    e.global_reward = rg;
    e.position = t / d;
    buffer.push(std::move(e));

    if (training && learner) {
      algo::TrainStats st = learner->train_step(buffer, rng_train);
      result.losses.push_back({t, static_cast<int>(cycle), eps_cycle,
                               st.loss_q, st.loss_aux, st.loss_reg,
                               st.skipped ? 0 : st.minibatches});
    }
    if (tail) {
      result.metrics.push_back(make_record(world, t, static_cast<int>(cycle),
                                           learner ? eps_cycle : 0.0, rewards,
                                           rg, phases, d));
    }
    if (learner && !warmup && off == cycle_len - d) {
      fs::path p = fs::path(cfg.out_dir) /
                   cycle_checkpoint_name(static_cast<int>(cycle) + 1);
      save_checkpoint(*learner, cfg, p.string());
      result.checkpoints.push_back(p.string());
    }

    prev_actions = std::move(actions);
    obs = std::move(next_obs);
  }

  if (learner) {
    fs::path p = fs::path(cfg.out_dir) / "ckpt_final.bin";
    save_checkpoint(*learner, cfg, p.string());
    result.final_checkpoint = p.string();
    write_losses_csv(result.losses,
                     (fs::path(cfg.out_dir) / "losses.csv").string());
  }
  write_metrics_csv(result.metrics, agents, "cycle",
                    (fs::path(cfg.out_dir) / "metrics.csv").string());
  write_manifest(cfg, command, elapsed_s(t0),
                 {"cycles = " + std::to_string(n_cycles)},
                 (fs::path(cfg.out_dir) / "manifest.txt").string());
  return result;
}

}  // namespace

TrainResult run_training(const RunConfig& cfg) {
  cfg.validate_training();
  Rng init = Rng(cfg.seed).fork("init");
  sim::RoadNetwork net =
      sim::RoadNetwork::build_grid(cfg.rows, cfg.cols, cfg.edge_length);
  std::unique_ptr<algo::Learner> learner =
      algo::Learner::create(cfg.learner, net, init);
  return run_schedule(cfg, learner.get(), nullptr, "train");
}

std::vector<MetricRecord> run_reference(const RunConfig& cfg,
                                        const std::string& kind) {
  cfg.validate_training();
  std::unique_ptr<Policy> policy = make_reference_policy(kind);
  return run_schedule(cfg, nullptr, policy.get(), "train-" + kind).metrics;
}

EvalResult run_policy(const RunConfig& cfg, Policy& policy,
                      const std::string& command,
                      const std::vector<std::string>& manifest_extra) {
  cfg.validate();
  Clock::time_point t0 = Clock::now();
  fs::create_directories(cfg.out_dir);

  sim::RoadNetwork net =
      sim::RoadNetwork::build_grid(cfg.rows, cfg.cols, cfg.edge_length);
  sim::FlowProgram flow = cfg.flow_program();
  sim::World world(net);
  std::vector<double> weights = blend_weights(cfg, net);
  Rng rng_eval = Rng(cfg.seed).fork("eval");

  // Segment boundaries: the flow intervals' start times.
  std::vector<long> starts;
  for (const FlowLines& fl : cfg.flow) starts.push_back(fl.start_s);
  if (starts.empty() || starts.front() > 0) starts.insert(starts.begin(), 0);

  EvalResult result;
  result.periods.resize(starts.size());
  const long d = cfg.decision_interval_s;
  const int agents = net.agent_count();
  std::vector<int> prev_actions(agents, 0);
  std::vector<std::vector<double>> obs = observe_all(world);

  for (long t = 0; t < cfg.horizon_s; t += d) {
    std::size_t period = 0;
    while (period + 1 < starts.size() && starts[period + 1] <= t) ++period;

    std::vector<int> actions = policy.act(world, obs, prev_actions, rng_eval);
    world.apply_actions(actions);
    world.advance_seconds(flow, static_cast<int>(d));
    std::vector<int> phases = committed_phases(world);

    std::vector<double> rewards = agentio::individual_rewards(world);
    double rg = agentio::global_reward(rewards, weights);
    result.periods[period].push_back(
        make_record(world, t, static_cast<int>(period) + 1, 0.0, rewards, rg,
                    phases, d));

    prev_actions = std::move(actions);
    obs = observe_all(world);
  }

  for (std::size_t k = 0; k < result.periods.size(); ++k) {
    fs::path p = fs::path(cfg.out_dir) /
                 ("metrics_period" + std::to_string(k + 1) + ".csv");
    write_metrics_csv(result.periods[k], agents, "period", p.string());
  }
  write_manifest(cfg, command, elapsed_s(t0), manifest_extra,
                 (fs::path(cfg.out_dir) / "manifest.txt").string());
  return result;
}

std::unique_ptr<algo::Learner> load_policy_learner(const RunConfig& cfg,
                                                   const std::string& ckpt_path) {
  neural::Checkpoint ckpt = neural::Checkpoint::load(ckpt_path);
  Rng init = Rng(cfg.seed).fork("init");
  sim::RoadNetwork net =
      sim::RoadNetwork::build_grid(cfg.rows, cfg.cols, cfg.edge_length);
  std::unique_ptr<algo::Learner> learner =
      algo::Learner::create(cfg.learner, net, init);
  learner->load_policy(ckpt);
  return learner;
}

}  // namespace gridlight::harness
