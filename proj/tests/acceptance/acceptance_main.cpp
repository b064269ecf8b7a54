// End-to-end acceptance gate: ten checks covering gradient correctness,
// objective algebra, decision equivalences, simulator physics, graph
// weighting, full-horizon learning signal, cooperation and transfer
// behavior, consistency-loss dynamics, and byte-level determinism.  Each
// check prints one [PASS]/[FAIL] line; the process exits non-zero if any
// fail.  Full-horizon runs are cached under ./acceptance_cache keyed by
// configuration hash and seed, so reruns are cheap.

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdarg>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "gridlight/agentio/pagerank.hpp"
#include "gridlight/algo/learner.hpp"
#include "gridlight/algo/mixing.hpp"
#include "gridlight/algo/replay.hpp"
#include "gridlight/core/rng.hpp"
#include "gridlight/harness/config.hpp"
#include "gridlight/harness/metrics_io.hpp"
#include "gridlight/harness/reference_policy.hpp"
#include "gridlight/harness/runner.hpp"
#include "gridlight/neural/checkpoint.hpp"
#include "gridlight/sim/network.hpp"
#include "gridlight/sim/world.hpp"

#include "../support/fd_check.hpp"

using namespace gridlight;
using algo::Algo;
using algo::Experience;
using algo::IdentityEncoding;
using algo::LearnerConfig;
using algo::ReplayBuffer;
using harness::MetricRecord;
using harness::RunConfig;
using harness::TrainRecord;
using neural::Checkpoint;
using neural::Matrix;

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Small shared helpers

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Random observation obeying the layout invariants: per-approach queue no
// longer than the vehicle count, a valid phase one-hot, non-negative times.
std::vector<double> random_obs(Rng& rng) {
  std::vector<double> o(19, 0.0);
  for (int i = 0; i < 4; ++i) {
    o[4 + i] = rng.uniform(0.0, 10.0);
    o[i] = rng.uniform(0.0, o[4 + i]);
    o[8 + i] = rng.uniform(0.0, 3.0);
    o[12 + i] = rng.uniform(0.0, 2.0);
  }
  const int ph = rng.next_int(2);
  o[16] = ph == 0 ? 1.0 : 0.0;
  o[17] = ph == 1 ? 1.0 : 0.0;
  o[18] = rng.uniform(0.0, 90.0);
  return o;
}

Experience random_experience(Rng& rng, int n, long long pos) {
  Experience e;
  e.position = pos;
  for (int a = 0; a < n; ++a) {
    e.obs.push_back(random_obs(rng));
    e.next_obs.push_back(random_obs(rng));
    e.prev_actions.push_back(rng.next_int(2));
    e.actions.push_back(rng.next_int(2));
    e.rewards.push_back(rng.uniform(-2.0, 0.0));
  }
  e.global_reward = rng.uniform(-2.0, 0.0);
  return e;
}

ReplayBuffer random_buffer(Rng& rng, int n, std::size_t count) {
  ReplayBuffer buf(count);
  for (std::size_t i = 0; i < count; ++i) {
    buf.push(random_experience(rng, n, static_cast<long long>(i)));
  }
  return buf;
}

// Straight-loop forward through "<prefix>/layerK/{w,b}" checkpoint tensors:
// ReLU between layers, linear output.  Oracle independent of the net code.
std::vector<double> ckpt_forward(const Checkpoint& ck, const std::string& prefix,
                                 std::span<const double> x) {
  std::vector<double> h(x.begin(), x.end());
  for (int l = 0;; ++l) {
    const std::string tag = prefix + "/layer" + std::to_string(l);
    const Matrix* w = ck.find(tag + "/w");
    if (w == nullptr) break;
    const Matrix* b = ck.find(tag + "/b");
    if (b == nullptr || w->rows() != h.size())
      throw std::runtime_error("checkpoint layout mismatch at " + tag);
    const bool last =
        ck.find(prefix + "/layer" + std::to_string(l + 1) + "/w") == nullptr;
    std::vector<double> z(w->cols());
    for (std::size_t j = 0; j < w->cols(); ++j) {
      double acc = (*b)(0, j);
      for (std::size_t i = 0; i < w->rows(); ++i) acc += h[i] * (*w)(i, j);
      z[j] = (!last && acc < 0.0) ? 0.0 : acc;
    }
    h = std::move(z);
  }
  if (h.empty()) throw std::runtime_error("no tensors under " + prefix);
  return h;
}

LearnerConfig tiny_cfg(Algo algo,
                       IdentityEncoding id = IdentityEncoding::coords) {
  LearnerConfig cfg;
  cfg.algo = algo;
  cfg.identity = id;
  cfg.hidden = {4};
  cfg.gru_encoder = 6;
  cfg.gru_hidden = 5;
  return cfg;
}

const std::vector<Algo> kAllAlgos = {Algo::idqn, Algo::iac,  Algo::coma,
                                     Algo::vdn,  Algo::qmix, Algo::qcombo};

// ---------------------------------------------------------------------------
// Cached full-horizon runs

const fs::path kCache = "acceptance_cache";

struct RunArtifacts {
  std::vector<MetricRecord> metrics;
  std::vector<TrainRecord> losses;
  std::string final_ckpt;
};

fs::path cache_dir(const RunConfig& cfg, const std::string& tag) {
  char hex[24];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, harness::config_hash(cfg));
  return kCache / (std::string(hex) + "_s" + std::to_string(cfg.seed) + "_" +
                   tag);
}

// The manifest is the last artifact a run writes, so its presence marks the
// directory complete.
RunArtifacts cached_training(RunConfig cfg) {
  const fs::path dir = cache_dir(cfg, "train");
  cfg.out_dir = dir.string();
  if (!fs::exists(dir / "manifest.txt")) {
    std::fprintf(stderr, "  [run] training -> %s\n", dir.string().c_str());
    harness::run_training(cfg);
  }
  RunArtifacts a;
  a.metrics = harness::read_metrics_csv((dir / "metrics.csv").string());
  a.losses = harness::read_losses_csv((dir / "losses.csv").string());
  a.final_ckpt = (dir / "ckpt_final.bin").string();
  return a;
}

std::vector<MetricRecord> cached_reference(RunConfig cfg,
                                           const std::string& kind) {
  const fs::path dir = cache_dir(cfg, kind);
  cfg.out_dir = dir.string();
  if (!fs::exists(dir / "manifest.txt")) {
    std::fprintf(stderr, "  [run] %s reference -> %s\n", kind.c_str(),
                 dir.string().c_str());
    harness::run_reference(cfg, kind);
  }
  return harness::read_metrics_csv((dir / "metrics.csv").string());
}

std::string train_text(int rows, int cols, const std::string& h,
                       const std::string& v, std::uint64_t seed,
                       const std::string& algo, const std::string& identity) {
  std::ostringstream o;
  o << "[network]\nrows = " << rows << "\ncols = " << cols << "\n"
    << "[flow]\ninterval = 0 12000 : " << h << " : " << v << "\n"
    << "[run]\nseed = " << seed << "\n"
    << "[learner]\nalgo = " << algo << "\nidentity = " << identity << "\n";
  return o.str();
}

std::string eval_text(int rows, int cols, const std::string& h,
                      const std::string& v, long horizon, std::uint64_t seed,
                      const std::string& algo, const std::string& identity) {
  std::ostringstream o;
  o << "[network]\nrows = " << rows << "\ncols = " << cols << "\n"
    << "[flow]\ninterval = 0 " << horizon << " : " << h << " : " << v << "\n"
    << "[run]\nseed = " << seed << "\nhorizon = " << horizon << "\n"
    << "[learner]\nalgo = " << algo << "\nidentity = " << identity << "\n";
  return o.str();
}

// Mean of a metric over one cycle's records.
double cycle_mean(const std::vector<MetricRecord>& recs, int window,
                  double MetricRecord::* field) {
  std::vector<double> v;
  for (const MetricRecord& m : recs)
    if (m.window == window) v.push_back(m.*field);
  return mean(v);
}

// ---------------------------------------------------------------------------
// 1. Gradient oracle on every learner

Outcome c1_gradient_oracle() {
  const std::vector<std::pair<int, int>> grids = {{1, 1}, {1, 2}, {2, 2}};
  double worst = 0.0;
  std::string worst_at;
  int instances = 0;
  for (Algo algo : kAllAlgos) {
    for (int i = 0; i < 20; ++i) {
      const auto [rows, cols] = grids[i % 3];
      const bool rnn = i % 2 == 1;
      const IdentityEncoding id =
          (i / 2) % 2 == 0 ? IdentityEncoding::coords : IdentityEncoding::onehot;
      const auto net = sim::RoadNetwork::build_grid(rows, cols);
      LearnerConfig cfg = tiny_cfg(algo, id);
      cfg.rnn = rnn;
      cfg.lambda = 0.7;
      Rng init(1000 + 17 * i + static_cast<int>(algo));
      auto lr = algo::Learner::create(cfg, net, init);
      Rng data(2000 + 29 * i + static_cast<int>(algo));
      const ReplayBuffer buf = random_buffer(data, net.agent_count(), 8);
      const std::vector<std::size_t> idx =
          rnn ? std::vector<std::size_t>{1, 2, 3, 4}
              : std::vector<std::size_t>{0, 2, 5};
      const auto groups = lr->probe(buf, idx);
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto rep = testsupport::fd_check_group(*lr, buf, idx, gi);
        if (rep.checked == 0) {
          return {false, fmt("empty parameter group %s/%s instance %d",
                             algo_name(algo).c_str(), groups[gi].name.c_str(),
                             i)};
        }
        if (rep.max_rel_err > worst) {
          worst = rep.max_rel_err;
          worst_at = fmt("%s/%s instance %d (rnn=%d)",
                         algo_name(algo).c_str(), groups[gi].name.c_str(), i,
                         rnn ? 1 : 0);
        }
      }
      ++instances;
    }
  }
  const bool ok = worst < 1e-4;
  return {ok, fmt("%d instances, worst rel err %.3g at %s (tol 1e-4, h 1e-5)",
                  instances, worst, worst_at.c_str())};
}

// ---------------------------------------------------------------------------
// 2. Coupled-objective algebra on a scalar linear instance; zero coupling
//    weight reduces to independent Q-learning exactly.

Outcome c2_coupled_algebra() {
  double worst = 0.0;
  const auto track = [&](double got, double want) {
    worst = std::max(worst, std::fabs(got - want));
  };

  {
    const auto net = sim::RoadNetwork::build_grid(1, 1);
    LearnerConfig cfg;
    cfg.algo = Algo::qcombo;
    cfg.hidden = {};  // single linear layer everywhere
    cfg.gamma = 0.9;
    cfg.lambda = 1.7;
    cfg.agent_weights = {0.6};
    Rng init(303);
    auto lr = algo::Learner::create(cfg, net, init);

    Checkpoint ck;
    lr->save(ck);
    for (auto& [name, m] : ck.tensors) {
      if (name.find("_target") == std::string::npos) continue;
      for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] += 0.03 + 0.01 * static_cast<double>(i % 7);
    }
    lr->load(ck);

    Rng data(7);
    ReplayBuffer buf(1);
    buf.push(random_experience(data, 1, 0));
    const Experience& e = buf[0];
    auto groups = lr->probe(buf, std::vector<std::size_t>{0});
    if (groups.size() != 1 || groups[0].nets.size() != 2 ||
        groups[0].grads.size() != 2) {
      return {false, "unexpected probe shape"};
    }
    auto& pg = groups[0];

    const algo::InputEncoder& enc = lr->encoder();
    std::vector<double> x(enc.local_dim()), xn(enc.local_dim());
    enc.encode_local(e.obs[0], e.prev_actions[0], 0, x);
    enc.encode_local(e.next_obs[0], e.actions[0], 0, xn);
    const auto q = ckpt_forward(ck, "local_q", x);
    const auto qt = ckpt_forward(ck, "local_q_target", xn);
    const int a = e.actions[0];
    const double qt_max = std::max(qt[0], qt[1]);
    const double delta = e.rewards[0] + cfg.gamma * qt_max - q[a];

    const int a_next = qt[1] > qt[0] ? 1 : 0;
    std::vector<double> gx(enc.global_dim()), gxn(enc.global_dim());
    enc.encode_global(e.obs, std::vector<int>{a}, gx);
    enc.encode_global(e.next_obs, std::vector<int>{a_next}, gxn);
    const double qw = ckpt_forward(ck, "global_q", gx)[0];
    const double qw_next = ckpt_forward(ck, "global_q_target", gxn)[0];
    const double y_g = e.global_reward + cfg.gamma * qw_next;
    const double z2 = qw - 0.6 * q[a];

    track(pg.loss, 0.5 * delta * delta + 0.5 * (y_g - qw) * (y_g - qw) +
                       cfg.lambda * 0.5 * z2 * z2);

    const double dy = -(delta + cfg.lambda * 0.6 * z2);
    const Matrix& dwl = pg.grads[0].tensors[0];
    const Matrix& dbl = pg.grads[0].tensors[1];
    for (std::size_t i = 0; i < x.size(); ++i) {
      track(dwl(i, a), x[i] * dy);
      track(dwl(i, 1 - a), 0.0);
    }
    track(dbl(0, a), dy);
    track(dbl(0, 1 - a), 0.0);

    const double dyg =
        -(y_g - (1.0 + cfg.lambda) * qw + cfg.lambda * 0.6 * q[a]);
    const Matrix& dwg = pg.grads[1].tensors[0];
    const Matrix& dbg = pg.grads[1].tensors[1];
    for (std::size_t i = 0; i < gx.size(); ++i) track(dwg(i, 0), gx[i] * dyg);
    track(dbg(0, 0), dyg);
  }
  if (worst > 1e-10)
    return {false, fmt("hand expansion off by %.3g (tol 1e-10)", worst)};

  // Zero coupling weight: the per-agent update must equal independent
  // Q-learning bit for bit.
  const auto net = sim::RoadNetwork::build_grid(1, 2);
  Rng data(7);
  const ReplayBuffer buf = random_buffer(data, 2, 60);
  const auto run = [&](Algo algo, double lambda) {
    LearnerConfig cfg = tiny_cfg(algo);
    cfg.hidden = {8};
    cfg.lambda = lambda;
    cfg.minibatches = 20;
    cfg.minibatch_size = 10;
    Rng init(42);
    auto lr = algo::Learner::create(cfg, net, init);
    Rng t(5);
    for (int s = 0; s < 3; ++s) {
      if (lr->train_step(buf, t).skipped) throw std::runtime_error("skipped");
    }
    Checkpoint out;
    lr->save(out);
    return out;
  };
  const Checkpoint ci = run(Algo::idqn, 0.0);
  const Checkpoint cq = run(Algo::qcombo, 0.0);
  int compared = 0;
  for (const auto& [name, m] : ci.tensors) {
    if (!name.starts_with("local_q")) continue;
    const Matrix* other = cq.find(name);
    if (other == nullptr || m.rows() != other->rows() ||
        m.cols() != other->cols() ||
        std::memcmp(m.data(), other->data(), m.size() * sizeof(double)) != 0) {
      return {false, "zero-weight update differs from independent Q-learning: " +
                         name};
    }
    ++compared;
  }
  if (compared != 8)
    return {false, fmt("expected 8 shared tensors, compared %d", compared)};
  return {true, fmt("hand expansion within %.2g; zero-weight update "
                    "bit-identical across %d tensors",
                    worst, compared)};
}

// ---------------------------------------------------------------------------
// 3. Brute-force decision equivalences

Outcome c3_brute_force() {
  // Additive decomposition: per-agent greedy equals the joint argmax of the
  // summed utilities on a 2x2 grid (16 joint actions).
  {
    const auto net = sim::RoadNetwork::build_grid(2, 2);
    LearnerConfig cfg = tiny_cfg(Algo::vdn);
    cfg.hidden = {6};
    Rng init(31);
    auto lr = algo::Learner::create(cfg, net, init);
    Checkpoint ck;
    lr->save(ck);
    const algo::InputEncoder& enc = lr->encoder();
    const int n = enc.agent_count();
    Rng data(32), act_rng(33);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::vector<double>> obs;
      std::vector<int> prev;
      for (int a = 0; a < n; ++a) {
        obs.push_back(random_obs(data));
        prev.push_back(data.next_int(2));
      }
      std::vector<std::vector<double>> q;
      for (int a = 0; a < n; ++a) {
        std::vector<double> x(enc.local_dim());
        enc.encode_local(obs[a], prev[a], a, x);
        q.push_back(ckpt_forward(ck, "local_q", x));
      }
      int best_joint = 0;
      double best_sum = -1e300;
      for (int joint = 0; joint < (1 << n); ++joint) {
        double sum = 0.0;
        for (int a = 0; a < n; ++a) sum += q[a][(joint >> a) & 1];
        if (sum > best_sum) {
          best_sum = sum;
          best_joint = joint;
        }
      }
      const auto act = lr->select_actions(obs, prev, 0.0, act_rng);
      for (int a = 0; a < n; ++a) {
        if (act[a] != ((best_joint >> a) & 1))
          return {false, fmt("additive greedy mismatch, trial %d", trial)};
      }
    }
  }

  // Monotone mixing: per-agent argmax realizes the exhaustive joint argmax
  // of the mixed value for 1000 random monotone parameterizations.
  {
    Rng rng(41);
    const int n = 3;
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> q0(n), q1(n);
      for (int a = 0; a < n; ++a) {
        q0[a] = rng.uniform(-2.0, 2.0);
        q1[a] = rng.uniform(-2.0, 2.0);
      }
      std::vector<double> w1(n * algo::kMixHidden), b1(algo::kMixHidden),
          w2(algo::kMixHidden);
      for (auto& v : w1) v = rng.uniform(-1.0, 1.0);
      for (auto& v : b1) v = rng.uniform(-1.0, 1.0);
      for (auto& v : w2) v = rng.uniform(-1.0, 1.0);
      const double b2 = rng.uniform(-1.0, 1.0);

      std::vector<double> greedy(n);
      int greedy_joint = 0;
      for (int a = 0; a < n; ++a) {
        greedy[a] = std::max(q0[a], q1[a]);
        if (q1[a] > q0[a]) greedy_joint |= 1 << a;
      }
      const double v_greedy = algo::mix_forward(greedy, w1, b1, w2, b2);

      double v_best = -1e300;
      int best_joint = 0;
      std::vector<double> sel(n);
      for (int joint = 0; joint < (1 << n); ++joint) {
        for (int a = 0; a < n; ++a) sel[a] = ((joint >> a) & 1) ? q1[a] : q0[a];
        const double v = algo::mix_forward(sel, w1, b1, w2, b2);
        if (v > v_best) {
          v_best = v;
          best_joint = joint;
        }
      }
      if (v_greedy != v_best || best_joint != greedy_joint)
        return {false, fmt("monotone argmax mismatch, trial %d", trial)};
    }
  }

  // Counterfactual baseline: zero expectation under the policy.
  {
    Rng rng(61);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> q(2), pi(2);
      q[0] = rng.uniform(-3.0, 3.0);
      q[1] = rng.uniform(-3.0, 3.0);
      const double l0 = rng.uniform(-2.0, 2.0);
      const double l1 = rng.uniform(-2.0, 2.0);
      const double m = std::max(l0, l1);
      const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
      pi[0] = e0 / (e0 + e1);
      pi[1] = e1 / (e0 + e1);
      double expectation = 0.0;
      for (int a = 0; a < 2; ++a)
        expectation += pi[a] * algo::counterfactual_advantage(q, pi, a);
      worst = std::max(worst, std::fabs(expectation));
    }
    if (worst > 1e-9)
      return {false, fmt("baseline expectation %.3g exceeds 1e-9", worst)};
    return {true, fmt("additive 50/50 trials, monotone 1000/1000 trials, "
                      "baseline expectation <= %.2g",
                      worst)};
  }
}

// ---------------------------------------------------------------------------
// 4. Simulator physics fuzz

Outcome c4_physics_fuzz() {
  const long kSeconds = 10000;
  const long kDecision = 5;

  const auto fuzz = [&](int rows, int cols, bool random_rates,
                        std::uint64_t seed) -> std::string {
    const sim::RoadNetwork net = sim::RoadNetwork::build_grid(rows, cols);
    Rng rng(seed);
    std::vector<double> rates(net.routes.size());
    for (double& r : rates)
      r = random_rates ? rng.uniform(100.0, 1400.0) : 1400.0;

    sim::FlowProgram flow;
    flow.enter_speed = 10.0;
    sim::FlowInterval iv;
    iv.start_s = 0;
    iv.end_s = kSeconds;
    iv.route_rates = rates;
    flow.intervals.push_back(iv);

    sim::World world(net, sim::IdmParams{});
    std::vector<int> actions(net.agent_count());
    std::vector<std::unordered_set<std::int64_t>> seen(net.routes.size());

    for (long t = 0; t < kSeconds; t += kDecision) {
      for (int& a : actions) a = static_cast<int>(rng.next_int(2));
      world.apply_actions(actions);  // throws on any internal physics fault
      world.advance_seconds(flow, kDecision);
      for (const sim::RouteSpec& r : net.routes) {
        const auto& cars = world.route_vehicles(r.id);
        for (std::size_t i = 0; i < cars.size(); ++i) {
          if (i > 0 && cars[i - 1].pos - cars[i].pos < 0.0)
            return fmt("negative gap on route %d at t=%ld", r.id, t);
          if (cars[i].speed < 0.0 || cars[i].pos >= r.length)
            return fmt("state out of range on route %d at t=%ld", r.id, t);
          seen[r.id].insert(cars[i].id);
        }
      }
      if (world.entered() != world.exited() + world.on_road())
        return fmt("conservation broken at t=%ld", t);
    }

    std::int64_t placed_total = 0;
    for (const sim::RouteSpec& r : net.routes) {
      const double placed = static_cast<double>(seen[r.id].size());
      placed_total += static_cast<std::int64_t>(seen[r.id].size());
      const double pending = world.pending_demand(r.id);
      const double expect =
          rates[r.id] * static_cast<double>(kSeconds) / 3600.0;
      if (std::fabs(placed + pending - expect) > 1.0 + 1e-6)
        return fmt("route %d demand drift: placed %g pending %g expect %g",
                   r.id, placed, pending, expect);
    }
    if (placed_total != world.entered())
      return fmt("entered %lld but observed %lld distinct vehicles",
                 static_cast<long long>(world.entered()),
                 static_cast<long long>(placed_total));
    return {};
  };

  struct Trial {
    int rows, cols;
    bool random_rates;
    std::uint64_t seed;
  };
  const std::vector<Trial> trials = {
      {1, 1, false, 11}, {1, 1, true, 12}, {2, 2, false, 13}, {2, 2, true, 14}};
  for (const Trial& tr : trials) {
    std::string err;
    try {
      err = fuzz(tr.rows, tr.cols, tr.random_rates, tr.seed);
    } catch (const std::exception& e) {
      err = e.what();
    }
    if (!err.empty())
      return {false, fmt("%dx%d (%s rates): %s", tr.rows, tr.cols,
                         tr.random_rates ? "random" : "max", err.c_str())};
  }
  return {true, fmt("4 runs x %ld s at up to 1400 veh/h per route: no "
                    "collisions, exact conservation, demand within +/-1",
                    kSeconds)};
}

// ---------------------------------------------------------------------------
// 5. Graph weighting

Outcome c5_pagerank() {
  const auto check_sum = [](const std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += x;
    return std::fabs(s - 1.0) <= 1e-9;
  };

  const auto w12 =
      agentio::pagerank_weights(sim::RoadNetwork::build_grid(1, 2));
  const auto w22 =
      agentio::pagerank_weights(sim::RoadNetwork::build_grid(2, 2));
  const sim::RoadNetwork net66 = sim::RoadNetwork::build_grid(6, 6);
  const auto w66 = agentio::pagerank_weights(net66);
  if (!check_sum(w12) || !check_sum(w22) || !check_sum(w66))
    return {false, "weights do not sum to 1 within 1e-9"};

  const auto spread = [](const std::vector<double>& w) {
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    return *hi - *lo;
  };
  if (spread(w12) > 1e-9 || spread(w22) > 1e-9)
    return {false, fmt("symmetric grids not uniform: spread %.3g / %.3g",
                       spread(w12), spread(w22))};

  double min_interior = 1e300, max_corner = -1e300;
  for (const sim::IntersectionSpec& x : net66.intersections) {
    const bool interior =
        x.row >= 1 && x.row <= 4 && x.col >= 1 && x.col <= 4;
    const bool corner = (x.row == 0 || x.row == 5) && (x.col == 0 || x.col == 5);
    if (interior) min_interior = std::min(min_interior, w66[x.id]);
    if (corner) max_corner = std::max(max_corner, w66[x.id]);
  }
  if (!(min_interior > max_corner))
    return {false, fmt("6x6 interior %.6g not above corner %.6g",
                       min_interior, max_corner)};
  return {true, fmt("sums exact, symmetric grids uniform, 6x6 interior "
                    "%.4g > corner %.4g",
                    min_interior, max_corner)};
}

// ---------------------------------------------------------------------------
// 6. Full-horizon learning signal (3 seeds, two maps)

struct MapSpec {
  const char* name;
  int rows, cols;
  const char* h;
  const char* v;
};
const MapSpec kUniform2x2{"2x2", 2, 2, "700 700", "700 700"};
const MapSpec kUnbalanced1x2{"1x2", 1, 2, "700", "10 620"};
const std::vector<std::uint64_t> kSeeds{1, 2, 3};

Outcome c6_learning_signal() {
  std::string detail;
  bool pass = true;
  for (const MapSpec& map : {kUniform2x2, kUnbalanced1x2}) {
    std::vector<double> qc, st, rd, qc_queue, st_queue;
    for (std::uint64_t seed : kSeeds) {
      RunConfig cfg = harness::parse_config_text(
          train_text(map.rows, map.cols, map.h, map.v, seed, "qcombo",
                     "onehot"),
          "c6");
      const int last = static_cast<int>(cfg.cycles()) - 1;
      const RunArtifacts art = cached_training(cfg);
      qc.push_back(cycle_mean(art.metrics, last, &MetricRecord::global_reward));
      qc_queue.push_back(cycle_mean(art.metrics, last, &MetricRecord::mean_queue));
      const auto ms = cached_reference(cfg, "static");
      st.push_back(cycle_mean(ms, last, &MetricRecord::global_reward));
      st_queue.push_back(cycle_mean(ms, last, &MetricRecord::mean_queue));
      const auto mr = cached_reference(cfg, "random");
      rd.push_back(cycle_mean(mr, last, &MetricRecord::global_reward));
    }
    const double mq = mean(qc), mst = mean(st), mrd = mean(rd);
    const bool map_ok = mq > mst && mq > mrd;
    pass = pass && map_ok;
    detail += fmt("%s: qcombo %.3f vs static %.3f vs random %.3f%s; ",
                  map.name, mq, mst, mrd, map_ok ? "" : " (NOT above both)");
    if (std::string(map.name) == "1x2") {
      const double q_qc = mean(qc_queue), q_st = mean(st_queue);
      const bool queue_ok = q_qc < q_st;
      pass = pass && queue_ok;
      detail += fmt("queue %.3f vs static %.3f%s", q_qc, q_st,
                    queue_ok ? "" : " (NOT below)");
    }
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 7. Cooperation signature on the unbalanced map

Outcome c7_cooperation() {
  const MapSpec& map = kUnbalanced1x2;
  RunConfig qcfg = harness::parse_config_text(
      train_text(map.rows, map.cols, map.h, map.v, 1, "qcombo", "onehot"),
      "c7");
  RunConfig dcfg = harness::parse_config_text(
      train_text(map.rows, map.cols, map.h, map.v, 1, "idqn", "onehot"), "c7");
  const std::string qc_ckpt = cached_training(qcfg).final_ckpt;
  const std::string dq_ckpt = cached_training(dcfg).final_ckpt;

  const long horizon = 2200, skip = 1000;
  const auto trace = [&](const std::string& ckpt, const char* algo,
                         const char* tag) {
    RunConfig cfg = harness::parse_config_text(
        eval_text(map.rows, map.cols, map.h, map.v, horizon, 1, algo,
                  "onehot"),
        "c7-eval");
    cfg.out_dir = (kCache / (std::string("c7_") + tag)).string();
    auto lr = harness::load_policy_learner(cfg, ckpt);
    harness::LearnerPolicy pol(*lr, 0.0);
    const harness::EvalResult res =
        harness::run_policy(cfg, pol, std::string("eval-") + tag, {});
    std::vector<int> ph;
    for (const auto& period : res.periods)
      for (const MetricRecord& m : period)
        if (m.step >= skip) ph.push_back(m.phases[0]);  // left intersection
    return ph;
  };
  const std::vector<int> qph = trace(qc_ckpt, "qcombo", "qcombo");
  const std::vector<int> dph = trace(dq_ckpt, "idqn", "idqn");

  // At least one switch into N-S inside every 120 s bucket.
  const std::size_t bucket = 120 / 5;
  int min_ns = 1 << 30;
  for (std::size_t b = 0; b + bucket <= qph.size(); b += bucket) {
    int ns = 0;
    for (std::size_t i = b == 0 ? 1 : b; i < b + bucket; ++i)
      if (qph[i - 1] == 0 && qph[i] == 1) ++ns;
    min_ns = std::min(min_ns, ns);
  }

  // Mean length of maximal E-W stretches, in seconds.
  const auto mean_ew = [](const std::vector<int>& ph) {
    double total = 0.0;
    int runs = 0;
    std::size_t i = 0;
    while (i < ph.size()) {
      if (ph[i] == 0) {
        std::size_t j = i;
        while (j < ph.size() && ph[j] == 0) ++j;
        total += static_cast<double>(j - i) * 5.0;
        ++runs;
        i = j;
      } else {
        ++i;
      }
    }
    return runs > 0 ? total / runs : 0.0;
  };
  const double q_ew = mean_ew(qph), d_ew = mean_ew(dph);
  const bool ns_ok = min_ns >= 1;
  const bool ew_ok = dph.empty() ? false : q_ew < d_ew;
  return {ns_ok && ew_ok,
          fmt("left agent N-S switches per 120 s >= %d%s; mean E-W green "
              "%.1f s vs independent learner %.1f s%s",
              min_ns, ns_ok ? "" : " (starved)", q_ew, d_ew,
              ew_ok ? "" : " (NOT shorter)")};
}

// ---------------------------------------------------------------------------
// 8. Transfer to the large grid

Outcome c8_transfer() {
  RunConfig src_cfg = harness::parse_config_text(
      train_text(2, 2, "700 700", "700 700", 1, "qcombo", "coords"), "c8");
  const std::string ckpt = cached_training(src_cfg).final_ckpt;

  const char* h = "700 280 260 240 780 200";
  const char* v = "10 620 620 50 90 700";
  const long horizon = 6000, skip = 1000;
  const auto run_mean = [&](const char* tag,
                            harness::Policy& pol) {
    RunConfig cfg = harness::parse_config_text(
        eval_text(6, 6, h, v, horizon, 1, "qcombo", "coords"), "c8-eval");
    cfg.out_dir = (kCache / (std::string("c8_") + tag)).string();
    const harness::EvalResult res =
        harness::run_policy(cfg, pol, std::string("eval-") + tag, {});
    std::vector<double> g;
    for (const auto& period : res.periods)
      for (const MetricRecord& m : period)
        if (m.step >= skip) g.push_back(m.global_reward);
    return mean(g);
  };

  RunConfig lcfg = harness::parse_config_text(
      eval_text(6, 6, h, v, horizon, 1, "qcombo", "coords"), "c8-load");
  auto lr = harness::load_policy_learner(lcfg, ckpt);
  harness::LearnerPolicy qc_pol(*lr, 0.0);
  const double qc = run_mean("qcombo", qc_pol);
  auto st_pol = harness::make_reference_policy("static");
  const double st = run_mean("static", *st_pol);
  auto rd_pol = harness::make_reference_policy("random");
  const double rd = run_mean("random", *rd_pol);

  const bool pass = qc > st && qc > rd;
  return {pass, fmt("6x6 weighted global reward: transferred %.3f vs static "
                    "%.3f vs random %.3f%s",
                    qc, st, rd, pass ? "" : " (NOT above both)")};
}

// ---------------------------------------------------------------------------
// 9. Consistency-loss dynamics

Outcome c9_consistency_dynamics() {
  const MapSpec& map = kUnbalanced1x2;
  RunConfig cfg = harness::parse_config_text(
      train_text(map.rows, map.cols, map.h, map.v, 1, "qcombo", "onehot"),
      "c9");
  const RunArtifacts art = cached_training(cfg);
  const int cycles = static_cast<int>(cfg.cycles());
  std::vector<double> sum(cycles, 0.0);
  std::vector<int> count(cycles, 0);
  for (const TrainRecord& t : art.losses) {
    if (t.cycle >= 0 && t.cycle < cycles) {
      sum[t.cycle] += t.loss_reg;
      count[t.cycle] += 1;
    }
  }
  std::vector<double> m(cycles);
  for (int k = 0; k < cycles; ++k)
    m[k] = count[k] > 0 ? sum[k] / count[k] : 0.0;
  int peak_at = 0;
  for (int k = 1; k < cycles; ++k)
    if (m[k] > m[peak_at]) peak_at = k;
  double later_min = 1e300;
  for (int k = peak_at + 1; k < cycles; ++k)
    later_min = std::min(later_min, m[k]);
  const bool rises = m[peak_at] > 1.05 * m[0] && peak_at > 0;
  const bool falls = peak_at + 1 < cycles && later_min < 0.95 * m[peak_at];
  return {rises && falls,
          fmt("per-cycle consistency loss: start %.4g, peak %.4g at cycle "
              "%d, later min %.4g%s%s",
              m[0], m[peak_at], peak_at, later_min,
              rises ? "" : " (no rise)", falls ? "" : " (no fall)")};
}

// ---------------------------------------------------------------------------
// 10. Byte-level determinism through the command-line tool

Outcome c10_cli_determinism() {
  const fs::path self = fs::read_symlink("/proc/self/exe");
  const std::string gl = (self.parent_path() / "gridlight").string();
  if (!fs::exists(gl)) return {false, "gridlight binary not found beside this one"};

  const fs::path dir = kCache / "c10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto sh = [&](const std::string& cmd) {
    const std::string full = cmd + " >> " + (dir / "log.txt").string() + " 2>&1";
    return std::system(full.c_str()) == 0;
  };
  const auto same = [&](const fs::path& a, const fs::path& b) {
    const std::string sa = slurp(a), sb = slurp(b);
    return !sa.empty() && sa == sb;
  };

  std::ofstream(dir / "train.ini")
      << "[network]\nrows = 1\ncols = 2\n"
      << "[flow]\ninterval = 0 2600 : 700 : 10 620\n"
      << "[run]\nseed = 7\nhorizon = 2600\n"
      << "[learner]\nalgo = qcombo\nidentity = onehot\n"
      << "minibatches = 10\nhidden = 32 32\n";
  std::ofstream(dir / "eval.ini")
      << "[network]\nrows = 1\ncols = 2\n"
      << "[flow]\ninterval = 0 150 : 700 : 10 620\n"
      << "interval = 150 300 : 200 : 300 100\n"
      << "[run]\nseed = 9\nhorizon = 300\n"
      << "[learner]\nalgo = qcombo\nidentity = onehot\n"
      << "minibatches = 10\nhidden = 32 32\n";

  const std::string tini = (dir / "train.ini").string();
  const std::string eini = (dir / "eval.ini").string();
  if (!sh(gl + " train --config " + tini + " --out " + (dir / "ta").string()) ||
      !sh(gl + " train --config " + tini + " --out " + (dir / "tb").string()))
    return {false, "train command failed (see c10/log.txt)"};
  if (!same(dir / "ta/metrics.csv", dir / "tb/metrics.csv") ||
      !same(dir / "ta/losses.csv", dir / "tb/losses.csv"))
    return {false, "train reruns differ"};

  const std::string ckpt = (dir / "ta/ckpt_final.bin").string();
  if (!sh(gl + " eval --checkpoint " + ckpt + " --config " + eini + " --out " +
          (dir / "ea").string()) ||
      !sh(gl + " eval --checkpoint " + ckpt + " --config " + eini + " --out " +
          (dir / "eb").string()))
    return {false, "eval command failed (see c10/log.txt)"};
  for (int k = 1; k <= 2; ++k) {
    const std::string f = "metrics_period" + std::to_string(k) + ".csv";
    if (!same(dir / "ea" / f, dir / "eb" / f))
      return {false, "eval reruns differ in " + f};
  }

  if (!sh(gl + " eval --policy random --config " + eini + " --out " +
          (dir / "ra").string()) ||
      !sh(gl + " eval --policy random --config " + eini + " --out " +
          (dir / "rb").string()))
    return {false, "reference eval failed (see c10/log.txt)"};
  if (!same(dir / "ra/metrics_period1.csv", dir / "rb/metrics_period1.csv"))
    return {false, "random-policy reruns differ"};

  if (!sh(gl + " transfer --checkpoint " + ckpt + " --target-config " + eini +
          " --out " + (dir / "xa").string()) ||
      !sh(gl + " transfer --checkpoint " + ckpt + " --target-config " + eini +
          " --out " + (dir / "xb").string()))
    return {false, "transfer command failed (see c10/log.txt)"};
  if (!same(dir / "xa/metrics_period1.csv", dir / "xb/metrics_period1.csv"))
    return {false, "transfer reruns differ"};

  return {true, "train, eval, reference and transfer reruns byte-identical"};
}

}  // namespace

// With no arguments every criterion runs in order; passing numbers
// (e.g. "acceptance 1 4 10") restricts the run to those criteria.
int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {"gradient oracle (finite differences, all learners)",
       c1_gradient_oracle},
      {"coupled objective algebra and zero-weight reduction",
       c2_coupled_algebra},
      {"brute-force decision equivalences", c3_brute_force},
      {"simulator physics fuzz", c4_physics_fuzz},
      {"influence weighting", c5_pagerank},
      {"full-horizon learning signal", c6_learning_signal},
      {"cooperation signature", c7_cooperation},
      {"transfer to the large grid", c8_transfer},
      {"consistency-loss dynamics", c9_consistency_dynamics},
      {"command-line determinism", c10_cli_determinism},
  };

  std::vector<bool> wanted(criteria.size(), argc <= 1);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[a]);
      return 2;
    }
    wanted[k - 1] = true;
  }

  fs::create_directories(kCache);
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!wanted[i]) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] %2zu. %s (%.1f s) %s\n", o.pass ? "PASS" : "FAIL",
                i + 1, criteria[i].name, dt, o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  std::printf("%s\n", all ? "acceptance: all criteria satisfied"
                          : "acceptance: FAILURES present");
  return all ? 0 : 1;
}
