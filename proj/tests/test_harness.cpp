#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gridlight/agentio/observation.hpp"
#include "gridlight/algo/learner.hpp"
#include "gridlight/core/rng.hpp"
#include "gridlight/harness/config.hpp"
#include "gridlight/harness/metrics_io.hpp"
#include "gridlight/harness/reference_policy.hpp"
#include "gridlight/harness/runner.hpp"
#include "gridlight/neural/checkpoint.hpp"
#include "gridlight/sim/network.hpp"
#include "gridlight/sim/world.hpp"

using namespace gridlight;
namespace fs = std::filesystem;
using harness::MetricRecord;
using harness::RunConfig;
using harness::TrainRecord;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "gridlight_harness_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

template <typename Fn>
std::string error_of(Fn fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

// Two full train/eval cycles on a 1x2 grid with small networks: the whole
// schedule in well under a second.
const char* kSmokeText = R"(
[network]
rows = 1
cols = 2

[flow]
interval = 0 2600 : 700 : 10 620

[run]
seed = 7
horizon = 2600
warmup = 1000
out_dir = unused

[learner]
algo = qcombo
identity = onehot
minibatches = 10
hidden = 32 32
)";

}  // namespace

TEST_CASE("config: omitted keys take documented defaults") {
  RunConfig cfg = harness::parse_config_text("[network]\nrows = 1\ncols = 2\n",
                                             "mem");
  CHECK(cfg.rows == 1);
  CHECK(cfg.cols == 2);
  CHECK(cfg.edge_length == 400.0);
  CHECK(cfg.enter_speed == 10.0);
  CHECK(cfg.flow.empty());
  CHECK(cfg.seed == 1);
  CHECK(cfg.horizon_s == 12000);
  CHECK(cfg.warmup_s == 1000);
  CHECK(cfg.train_period_s == 400);
  CHECK(cfg.eval_period_s == 400);
  CHECK(cfg.decision_interval_s == 5);
  CHECK(cfg.eval_tail_s == 200);
  CHECK(cfg.replay_capacity == 1000);
  CHECK(cfg.epsilon0 == 0.9);
  CHECK(cfg.epsilon_decay == 0.995);
  CHECK(cfg.eval_epsilon == 0.0);
  CHECK(cfg.learner.algo == algo::Algo::qcombo);
  CHECK(cfg.learner.gamma == 0.99);
  CHECK(cfg.cycles() == 13);
  CHECK(cfg.cycle_len_s() == 800);
  cfg.validate_training();  // the defaults describe a runnable schedule
}

TEST_CASE("config: canonical echo round-trips byte for byte") {
  RunConfig cfg = harness::parse_config_text(kSmokeText, "mem");
  const std::string echo = harness::config_echo(cfg);
  RunConfig again = harness::parse_config_text(echo, "echo");
  CHECK(harness::config_echo(again) == echo);
  CHECK(harness::config_hash(again) == harness::config_hash(cfg));
}

TEST_CASE("config: line rates feed both directed routes") {
  RunConfig cfg = harness::parse_config_text(kSmokeText, "mem");
  const sim::FlowProgram fp = cfg.flow_program();
  CHECK(fp.enter_speed == 10.0);
  const sim::FlowInterval* iv = fp.at(0);
  REQUIRE(iv != nullptr);
  // 1x2 route order: east row, west row, north col 0, north col 1,
  // south col 0, south col 1.
  CHECK(iv->route_rates ==
        std::vector<double>{700.0, 700.0, 10.0, 620.0, 10.0, 620.0});
  CHECK(fp.at(2599) == iv);
  CHECK(fp.at(2600) == nullptr);
}

TEST_CASE("config: malformed input is rejected with file and line") {
  auto parse = [](const std::string& text) {
    return harness::parse_config_text(text, "cfg.ini");
  };

  SUBCASE("unknown key") {
    std::string m = error_of([&] { parse("[network]\nbogus = 1\n"); });
    CHECK(m.find("cfg.ini:2") != std::string::npos);
    CHECK(m.find("bogus") != std::string::npos);
  }
  SUBCASE("unknown section") {
    CHECK_THROWS_AS(parse("[nope]\nx = 1\n"), std::invalid_argument);
  }
  SUBCASE("duplicate key") {
    CHECK_THROWS_AS(parse("[network]\nrows = 2\nrows = 3\n"),
                    std::invalid_argument);
  }
  SUBCASE("key outside any section") {
    CHECK_THROWS_AS(parse("rows = 2\n"), std::invalid_argument);
  }
  SUBCASE("unparseable number") {
    CHECK_THROWS_AS(parse("[network]\nrows = two\n"), std::invalid_argument);
  }
  SUBCASE("bad boolean") {
    CHECK_THROWS_AS(parse("[learner]\nrnn = maybe\n"), std::invalid_argument);
  }
  SUBCASE("negative flow rate") {
    CHECK_THROWS_AS(parse("[flow]\ninterval = 0 100 : -5 : 5\n"),
                    std::invalid_argument);
  }
  SUBCASE("rate count must match the grid") {
    CHECK_THROWS_AS(parse("[network]\nrows = 2\ncols = 2\n"
                          "[flow]\ninterval = 0 100 : 700 : 700 700\n"),
                    std::invalid_argument);
  }
  SUBCASE("overlapping flow intervals") {
    CHECK_THROWS_AS(parse("[flow]\ninterval = 0 100 : 5 : 5\n"
                          "interval = 50 200 : 5 : 5\n"),
                    std::invalid_argument);
  }
  SUBCASE("periods must be multiples of the decision interval") {
    CHECK_THROWS_AS(parse("[run]\ndecision_interval = 7\n"),
                    std::invalid_argument);
  }
  SUBCASE("eval tail cannot exceed the eval period") {
    CHECK_THROWS_AS(parse("[run]\neval_tail = 600\n"), std::invalid_argument);
  }
  SUBCASE("training needs one full cycle after warmup") {
    RunConfig cfg = harness::parse_config_text("[run]\nhorizon = 1500\n",
                                               "mem");
    cfg.validate();  // fine for frozen-policy runs...
    CHECK_THROWS_AS(cfg.validate_training(), std::invalid_argument);
  }
}

TEST_CASE("config: hash ignores run identity but sees substance") {
  RunConfig a = harness::parse_config_text(kSmokeText, "mem");
  RunConfig b = a;
  b.seed = 999;
  b.out_dir = "elsewhere";
  CHECK(harness::config_hash(a) == harness::config_hash(b));
  b.learner.lambda = 0.25;
  CHECK(harness::config_hash(a) != harness::config_hash(b));
  RunConfig c = a;
  c.flow[0].vertical[1] = 621.0;
  CHECK(harness::config_hash(a) != harness::config_hash(c));
}

TEST_CASE("static reference: all lights switch exactly on 30 s marks") {
  auto pol = harness::make_reference_policy("static");
  const sim::RoadNetwork net = sim::RoadNetwork::build_grid(1, 1, 400.0);
  sim::World world(net, sim::IdmParams{});
  const sim::FlowProgram no_demand;
  Rng rng(1);
  std::vector<std::vector<double>> obs;
  std::vector<int> prev{0};

  double max_phase_s = 0.0;
  int commits = 0;
  int last_axis = static_cast<int>(world.light(0).committed);
  for (long t = 0; t < 300; t += 5) {
    std::vector<int> a = pol->act(world, obs, prev, rng);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == ((t > 0 && t % 30 == 0) ? 1 : 0));
    world.apply_actions(a);
    for (int s = 0; s < 5; ++s) {
      world.advance_seconds(no_demand, 1);
      max_phase_s = std::max(max_phase_s, world.phase_duration_s(0));
      int axis = static_cast<int>(world.light(0).committed);
      if (axis != last_axis) {
        commits += 1;
        last_axis = axis;
      }
    }
  }
  // 30 s green plus the 3 s clearance, never longer.
  CHECK(max_phase_s <= 33.0);
  CHECK(commits == 9);  // switches at 30, 60, ..., 270
}

TEST_CASE("random reference: keep/switch is a fair coin") {
  auto pol = harness::make_reference_policy("random");
  const sim::RoadNetwork net = sim::RoadNetwork::build_grid(1, 1, 400.0);
  sim::World world(net, sim::IdmParams{});
  Rng rng(123);
  std::vector<std::vector<double>> obs;
  std::vector<int> prev{0};
  const int n = 10000;
  int switches = 0;
  for (int i = 0; i < n; ++i) switches += pol->act(world, obs, prev, rng)[0];
  CHECK(std::abs(switches / static_cast<double>(n) - 0.5) <= 0.02);
}

TEST_CASE("reference policy factory rejects unknown kinds") {
  CHECK_THROWS_AS(harness::make_reference_policy("greedy"),
                  std::invalid_argument);
  CHECK(harness::is_reference_kind("static"));
  CHECK(harness::is_reference_kind("random"));
  CHECK(!harness::is_reference_kind("qcombo"));
}

TEST_CASE("metrics io: files round-trip exactly") {
  const fs::path dir = fresh_dir("metrics_io");

  MetricRecord a;
  a.step = 1600;
  a.window = 1;
  a.epsilon = 0.9;
  a.global_reward = -1.0 / 3.0;
  a.rewards = {-0.125, 1e-9, 17.25};
  a.mean_queue = 3.5;
  a.mean_wait = 0.0625;
  a.mean_delay = 0.875;
  a.phases = {0, 1, 0};
  MetricRecord b = a;
  b.step = 1605;
  b.rewards = {0.0, -2.0, 0.3};
  b.phases = {1, 1, 1};

  const std::string mpath = (dir / "metrics.csv").string();
  harness::write_metrics_csv({a, b}, 3, "cycle", mpath);
  const std::string header =
      "step,cycle,epsilon,global_reward,reward_0,reward_1,reward_2,"
      "mean_queue,mean_wait,mean_delay,phase_0,phase_1,phase_2\n";
  CHECK(slurp(mpath).rfind(header, 0) == 0);

  std::vector<MetricRecord> back = harness::read_metrics_csv(mpath);
  REQUIRE(back.size() == 2);
  CHECK(back[0].step == a.step);
  CHECK(back[0].window == a.window);
  CHECK(back[0].epsilon == a.epsilon);
  CHECK(back[0].global_reward == a.global_reward);
  CHECK(back[0].rewards == a.rewards);
  CHECK(back[0].mean_queue == a.mean_queue);
  CHECK(back[0].mean_wait == a.mean_wait);
  CHECK(back[0].mean_delay == a.mean_delay);
  CHECK(back[0].phases == a.phases);
  CHECK(back[1].rewards == b.rewards);

  SUBCASE("empty record set still pins the schema") {
    const std::string epath = (dir / "empty.csv").string();
    harness::write_metrics_csv({}, 3, "cycle", epath);
    CHECK(slurp(epath) == header);
    CHECK(harness::read_metrics_csv(epath).empty());
  }
  SUBCASE("record width must match the agent count") {
    MetricRecord bad = a;
    bad.rewards.pop_back();
    CHECK_THROWS_AS(harness::write_metrics_csv({bad}, 3, "cycle",
                                               (dir / "bad.csv").string()),
                    std::invalid_argument);
  }
  SUBCASE("losses round-trip") {
    TrainRecord t;
    t.step = 1000;
    t.cycle = 0;
    t.epsilon = 0.9;
    t.loss_q = 0.123456789012345;
    t.loss_aux = 0.0;
    t.loss_reg = 42.0;
    t.minibatches = 10;
    const std::string lpath = (dir / "losses.csv").string();
    harness::write_losses_csv({t}, lpath);
    std::vector<TrainRecord> lb = harness::read_losses_csv(lpath);
    REQUIRE(lb.size() == 1);
    CHECK(lb[0].step == t.step);
    CHECK(lb[0].cycle == t.cycle);
    CHECK(lb[0].epsilon == t.epsilon);
    CHECK(lb[0].loss_q == t.loss_q);
    CHECK(lb[0].loss_aux == t.loss_aux);
    CHECK(lb[0].loss_reg == t.loss_reg);
    CHECK(lb[0].minibatches == t.minibatches);
  }
}

TEST_CASE("manifest records provenance and the effective configuration") {
  const fs::path dir = fresh_dir("manifest");
  RunConfig cfg = harness::parse_config_text(kSmokeText, "mem");
  const std::string path = (dir / "manifest.txt").string();
  harness::write_manifest(cfg, "train", 1.5, {"cycles = 2"}, path);
  const std::string text = slurp(path);
  CHECK(text.find("command = train\n") != std::string::npos);
  CHECK(text.find("revision = ") != std::string::npos);
  CHECK(text.find("seed = 7\n") != std::string::npos);
  CHECK(text.find("config_hash = ") != std::string::npos);
  CHECK(text.find("cycles = 2\n") != std::string::npos);
  CHECK(text.find("# effective configuration") != std::string::npos);
  CHECK(text.find(harness::config_echo(cfg)) != std::string::npos);
}

TEST_CASE("training run: complete artifacts on the documented schedule") {
  const fs::path dir1 = fresh_dir("train_a");
  RunConfig cfg = harness::parse_config_text(kSmokeText, "mem");
  cfg.out_dir = dir1.string();

  harness::TrainResult r = harness::run_training(cfg);

  // Two cycles; eval tail of 200 s at 5 s decisions = 40 records per cycle.
  REQUIRE(r.metrics.size() == 80);
  CHECK(r.metrics.front().step == 1600);   // warmup + train + untracked half
  CHECK(r.metrics[39].step == 1795);
  CHECK(r.metrics[39].window == 0);
  CHECK(r.metrics[40].step == 2400);
  CHECK(r.metrics[40].window == 1);
  CHECK(r.metrics.back().step == 2595);
  // One training step per decision: 400 s / 5 s = 80 per cycle.
  REQUIRE(r.losses.size() == 160);
  CHECK(r.losses.front().step == 1000);
  CHECK(r.losses[79].step == 1395);
  CHECK(r.losses[80].step == 1800);
  CHECK(r.losses.back().step == 2195);
  // Exploration is frozen within a cycle and decays between cycles.
  CHECK(r.metrics.front().epsilon == 0.9);
  CHECK(r.metrics.back().epsilon == 0.9 * 0.995);
  CHECK(r.losses.front().epsilon == 0.9);
  CHECK(r.losses.back().epsilon == 0.9 * 0.995);
  for (const TrainRecord& t : r.losses) CHECK(t.minibatches == 10);

  REQUIRE(r.checkpoints.size() == 2);
  for (const std::string& p : r.checkpoints) CHECK(fs::exists(p));
  CHECK(fs::exists(r.final_checkpoint));
  CHECK(fs::exists(dir1 / "metrics.csv"));
  CHECK(fs::exists(dir1 / "losses.csv"));
  CHECK(fs::exists(dir1 / "manifest.txt"));
  CHECK(harness::read_metrics_csv((dir1 / "metrics.csv").string()).size() ==
        80);
  CHECK(harness::read_losses_csv((dir1 / "losses.csv").string()).size() ==
        160);
  CHECK(slurp(dir1 / "manifest.txt").find("cycles = 2") != std::string::npos);

  // The final checkpoint remembers its origin.
  neural::Checkpoint ck = neural::Checkpoint::load(r.final_checkpoint);
  CHECK(ck.seed == 7);
  CHECK(ck.config_hash == harness::config_hash(cfg));
  CHECK(ck.rows == 1);
  CHECK(ck.cols == 2);

  SUBCASE("same seed reruns are byte-identical") {
    const fs::path dir2 = fresh_dir("train_b");
    RunConfig cfg2 = cfg;
    cfg2.out_dir = dir2.string();
    harness::run_training(cfg2);
    CHECK(slurp(dir1 / "metrics.csv") == slurp(dir2 / "metrics.csv"));
    CHECK(slurp(dir1 / "losses.csv") == slurp(dir2 / "losses.csv"));
    CHECK(slurp(dir1 / "ckpt_final.bin") == slurp(dir2 / "ckpt_final.bin"));
  }
  SUBCASE("a different seed changes the trajectory") {
    const fs::path dir3 = fresh_dir("train_c");
    RunConfig cfg3 = cfg;
    cfg3.seed = 8;
    cfg3.out_dir = dir3.string();
    harness::run_training(cfg3);
    CHECK(slurp(dir1 / "metrics.csv") != slurp(dir3 / "metrics.csv"));
  }
}

TEST_CASE("reference run: same schedule, no learning artifacts") {
  const fs::path dir = fresh_dir("reference");
  RunConfig cfg = harness::parse_config_text(kSmokeText, "mem");
  cfg.out_dir = dir.string();
  std::vector<MetricRecord> recs = harness::run_reference(cfg, "static");
  REQUIRE(recs.size() == 80);
  for (const MetricRecord& m : recs) CHECK(m.epsilon == 0.0);
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(fs::exists(dir / "manifest.txt"));
  CHECK(!fs::exists(dir / "losses.csv"));
  CHECK(!fs::exists(dir / "ckpt_final.bin"));
}

TEST_CASE("frozen-policy run: records bucketed by flow period") {
  const fs::path dir = fresh_dir("eval_periods");
  RunConfig cfg = harness::parse_config_text(
      "[network]\nrows = 1\ncols = 1\n"
      "[flow]\n"
      "interval = 0 100 : 300 : 300\n"
      "interval = 100 200 : 900 : 100\n"
      "interval = 200 300 : 100 : 900\n"
      "[run]\nhorizon = 300\n",
      "mem");
  cfg.out_dir = dir.string();
  auto pol = harness::make_reference_policy("static");
  harness::EvalResult er = harness::run_policy(cfg, *pol, "eval-static", {});
  REQUIRE(er.periods.size() == 3);
  for (int k = 0; k < 3; ++k) {
    REQUIRE(er.periods[k].size() == 20);
    CHECK(er.periods[k].front().step == 100 * k);
    CHECK(er.periods[k].back().step == 100 * k + 95);
    for (const MetricRecord& m : er.periods[k]) CHECK(m.window == k + 1);
    CHECK(fs::exists(dir / ("metrics_period" + std::to_string(k + 1) +
                            ".csv")));
  }
  CHECK(fs::exists(dir / "manifest.txt"));
}

TEST_CASE("checkpoints move across grids only with coordinate identities") {
  const fs::path dir = fresh_dir("transfer");
  RunConfig src = harness::parse_config_text(
      "[network]\nrows = 1\ncols = 2\n"
      "[learner]\nalgo = qcombo\nidentity = coords\nhidden = 16 16\n",
      "mem");
  const sim::RoadNetwork net =
      sim::RoadNetwork::build_grid(src.rows, src.cols, src.edge_length);
  Rng init = Rng(5).fork("init");
  auto learner = algo::Learner::create(src.learner, net, init);
  neural::Checkpoint ck;
  learner->save(ck);
  const std::string ckpt = (dir / "ckpt.bin").string();
  ck.save(ckpt);

  RunConfig dst = harness::parse_config_text(
      "[network]\nrows = 2\ncols = 2\n"
      "[flow]\ninterval = 0 100 : 300 300 : 300 300\n"
      "[run]\nhorizon = 100\n"
      "[learner]\nalgo = qcombo\nidentity = coords\nhidden = 16 16\n",
      "mem");
  dst.out_dir = (dir / "out").string();
  auto frozen = harness::load_policy_learner(dst, ckpt);
  harness::LearnerPolicy pol(*frozen, 0.0);
  harness::EvalResult er = harness::run_policy(dst, pol, "transfer", {});
  REQUIRE(er.periods.size() == 1);
  REQUIRE(er.periods[0].size() == 20);
  for (const MetricRecord& m : er.periods[0]) {
    CHECK(std::isfinite(m.global_reward));
    CHECK(m.rewards.size() == 4);
  }

  SUBCASE("one-hot identities stay grid-bound") {
    RunConfig src2 = src;
    src2.learner.identity = algo::IdentityEncoding::onehot;
    Rng init2 = Rng(5).fork("init");
    auto learner2 = algo::Learner::create(src2.learner, net, init2);
    neural::Checkpoint ck2;
    learner2->save(ck2);
    const std::string ckpt2 = (dir / "ckpt_onehot.bin").string();
    ck2.save(ckpt2);
    RunConfig dst2 = dst;
    dst2.learner.identity = algo::IdentityEncoding::onehot;
    CHECK_THROWS_AS(harness::load_policy_learner(dst2, ckpt2),
                    std::runtime_error);
  }
}

TEST_CASE("action selection never touches parameters") {
  const fs::path dir = fresh_dir("frozen_select");
  RunConfig cfg = harness::parse_config_text(kSmokeText, "mem");
  const sim::RoadNetwork net =
      sim::RoadNetwork::build_grid(cfg.rows, cfg.cols, cfg.edge_length);
  Rng init = Rng(3).fork("init");
  auto learner = algo::Learner::create(cfg.learner, net, init);

  neural::Checkpoint before;
  learner->save(before);
  before.save((dir / "before.bin").string());

  sim::World world(net, sim::IdmParams{});
  world.advance_seconds(cfg.flow_program(), 60);
  std::vector<std::vector<double>> obs(net.agent_count());
  for (int i = 0; i < net.agent_count(); ++i)
    obs[i] = agentio::observe(world, i);
  std::vector<int> prev(net.agent_count(), 0);
  Rng rng(9);
  for (int k = 0; k < 5; ++k)
    learner->select_actions(obs, prev, 0.3, rng);

  neural::Checkpoint after;
  learner->save(after);
  after.save((dir / "after.bin").string());
  CHECK(slurp(dir / "before.bin") == slurp(dir / "after.bin"));
}
