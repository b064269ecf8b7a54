#include "gridlight/harness/config.hpp"

#include <climits>
#include <fstream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>

#include "gridlight/core/rng.hpp"
#include "gridlight/core/text.hpp"

namespace gridlight::harness {

namespace {

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<double> parse_doubles(std::string_view s) {
  std::vector<double> out;
  for (const std::string& tok : tokenize(s)) out.push_back(parse_double(tok));
  return out;
}

std::vector<std::size_t> parse_sizes(std::string_view s) {
  std::vector<std::size_t> out;
  for (const std::string& tok : tokenize(s)) {
    long v = parse_long(tok);
    if (v <= 0) throw std::invalid_argument("size must be positive: " + tok);
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

bool parse_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) +
                              "'");
}

int parse_int(std::string_view s) {
  long v = parse_long(s);
  if (v < INT_MIN || v > INT_MAX)
    throw std::invalid_argument("value out of int range: " + std::string(s));
  return static_cast<int>(v);
}

// "start end : h rates : v rates", rates whitespace-separated per line.
FlowLines parse_interval(std::string_view value) {
  std::vector<std::string> parts = split(value, ':');
  if (parts.size() != 3)
    throw std::invalid_argument(
        "interval needs 'start end : horizontal rates : vertical rates'");
  std::vector<std::string> when = tokenize(parts[0]);
  if (when.size() != 2)
    throw std::invalid_argument("interval needs exactly start and end");
  FlowLines fl;
  fl.start_s = parse_long(when[0]);
  fl.end_s = parse_long(when[1]);
  fl.horizontal = parse_doubles(parts[1]);
  fl.vertical = parse_doubles(parts[2]);
  return fl;
}

std::string join_doubles(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

std::string join_sizes(std::span<const std::size_t> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

// Canonical form; the hash variant drops run identity (seed, out_dir).
std::string canonical(const RunConfig& c, bool for_hash) {
  std::ostringstream o;
  o << "[network]\n";
  o << "rows = " << c.rows << "\n";
  o << "cols = " << c.cols << "\n";
  o << "edge_length = " << format_double(c.edge_length) << "\n";
  o << "\n[flow]\n";
  o << "enter_speed = " << format_double(c.enter_speed) << "\n";
  for (const FlowLines& fl : c.flow) {
    o << "interval = " << fl.start_s << " " << fl.end_s << " : "
      << join_doubles(fl.horizontal) << " : " << join_doubles(fl.vertical)
      << "\n";
  }
  o << "\n[run]\n";
  if (!for_hash) o << "seed = " << c.seed << "\n";
  o << "horizon = " << c.horizon_s << "\n";
  o << "warmup = " << c.warmup_s << "\n";
  o << "train_period = " << c.train_period_s << "\n";
  o << "eval_period = " << c.eval_period_s << "\n";
  o << "decision_interval = " << c.decision_interval_s << "\n";
  o << "eval_tail = " << c.eval_tail_s << "\n";
  o << "replay_capacity = " << c.replay_capacity << "\n";
  o << "epsilon0 = " << format_double(c.epsilon0) << "\n";
  o << "epsilon_decay = " << format_double(c.epsilon_decay) << "\n";
  o << "eval_epsilon = " << format_double(c.eval_epsilon) << "\n";
  if (!for_hash) o << "out_dir = " << c.out_dir << "\n";
  o << "\n[learner]\n";
  o << "algo = " << algo::algo_name(c.learner.algo) << "\n";
  o << "identity = " << algo::identity_name(c.learner.identity) << "\n";
  o << "rnn = " << (c.learner.rnn ? "true" : "false") << "\n";
  o << "gamma = " << format_double(c.learner.gamma) << "\n";
  o << "lr_q = " << format_double(c.learner.lr_q) << "\n";
  o << "lr_actor = " << format_double(c.learner.lr_actor) << "\n";
  o << "tau = " << format_double(c.learner.tau) << "\n";
  o << "lambda = " << format_double(c.learner.lambda) << "\n";
  o << "minibatches = " << c.learner.minibatches << "\n";
  o << "minibatch_size = " << c.learner.minibatch_size << "\n";
  o << "rnn_periods = " << c.learner.rnn_periods << "\n";
  o << "rnn_period_len = " << c.learner.rnn_period_len << "\n";
  o << "hidden = " << join_sizes(c.learner.hidden) << "\n";
  o << "gru_encoder = " << c.learner.gru_encoder << "\n";
  o << "gru_hidden = " << c.learner.gru_hidden << "\n";
  o << "agent_weights = " << join_doubles(c.learner.agent_weights) << "\n";
  return std::move(o).str();
}

}  // namespace

sim::FlowProgram RunConfig::flow_program() const {
  sim::FlowProgram prog;
  prog.enter_speed = enter_speed;
  for (const FlowLines& fl : flow) {
    sim::FlowInterval iv;
    iv.start_s = fl.start_s;
    iv.end_s = fl.end_s;
    iv.route_rates.assign(2 * static_cast<std::size_t>(rows + cols), 0.0);
    for (int r = 0; r < rows; ++r) {
      iv.route_rates[r] = fl.horizontal[r];         // eastbound
      iv.route_rates[rows + r] = fl.horizontal[r];  // westbound
    }
    for (int c = 0; c < cols; ++c) {
      iv.route_rates[2 * rows + c] = fl.vertical[c];         // northbound
      iv.route_rates[2 * rows + cols + c] = fl.vertical[c];  // southbound
    }
    prog.intervals.push_back(std::move(iv));
  }
  return prog;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
  };
  if (rows < 1 || cols < 1) fail("rows and cols must be at least 1");
  if (edge_length <= 0.0) fail("edge_length must be positive");
  if (enter_speed < 0.0) fail("enter_speed must be non-negative");
  long prev_end = -1;
  for (const FlowLines& fl : flow) {
    if (fl.start_s < 0) fail("flow interval start must be non-negative");
    if (fl.end_s <= fl.start_s) fail("flow interval end must exceed start");
    if (fl.start_s < prev_end) fail("flow intervals must be ordered and disjoint");
    prev_end = fl.end_s;
    if (static_cast<int>(fl.horizontal.size()) != rows)
      fail("flow interval needs one horizontal rate per row");
    if (static_cast<int>(fl.vertical.size()) != cols)
      fail("flow interval needs one vertical rate per column");
    for (double r : fl.horizontal)
      if (r < 0.0) fail("flow rates must be non-negative");
    for (double r : fl.vertical)
      if (r < 0.0) fail("flow rates must be non-negative");
  }
  if (horizon_s <= 0) fail("horizon must be positive");
  if (warmup_s < 0) fail("warmup must be non-negative");
  if (train_period_s <= 0 || eval_period_s <= 0)
    fail("train_period and eval_period must be positive");
  if (decision_interval_s <= 0) fail("decision_interval must be positive");
  if (eval_tail_s <= 0 || eval_tail_s > eval_period_s)
    fail("eval_tail must lie in (0, eval_period]");
  for (long v : {horizon_s, warmup_s, train_period_s, eval_period_s,
                 eval_tail_s}) {
    if (v % decision_interval_s != 0)
      fail("horizon, warmup, periods and eval_tail must be multiples of "
           "decision_interval");
  }
  if (replay_capacity == 0) fail("replay_capacity must be positive");
  if (epsilon0 < 0.0 || epsilon0 > 1.0) fail("epsilon0 must lie in [0, 1]");
  if (epsilon_decay <= 0.0 || epsilon_decay > 1.0)
    fail("epsilon_decay must lie in (0, 1]");
  if (eval_epsilon < 0.0 || eval_epsilon > 1.0)
    fail("eval_epsilon must lie in [0, 1]");
  if (out_dir.empty()) fail("out_dir must not be empty");

  const algo::LearnerConfig& l = learner;
  if (l.gamma < 0.0 || l.gamma >= 1.0) fail("gamma must lie in [0, 1)");
  if (l.lr_q <= 0.0 || l.lr_actor <= 0.0) fail("learning rates must be positive");
  if (l.tau <= 0.0 || l.tau > 1.0) fail("tau must lie in (0, 1]");
  if (l.lambda < 0.0) fail("lambda must be non-negative");
  if (l.minibatches <= 0 || l.minibatch_size <= 0)
    fail("minibatches and minibatch_size must be positive");
  if (l.rnn_periods <= 0 || l.rnn_period_len <= 0)
    fail("rnn_periods and rnn_period_len must be positive");
  if (l.gru_encoder == 0 || l.gru_hidden == 0)
    fail("gru sizes must be positive");
  if (!l.agent_weights.empty() &&
      static_cast<int>(l.agent_weights.size()) != agent_count())
    fail("agent_weights needs one entry per intersection");
}

void RunConfig::validate_training() const {
  validate();
  if (horizon_s < warmup_s + cycle_len_s())
    throw std::invalid_argument(
        "config: horizon must cover warmup plus at least one train/eval cycle");
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

RunConfig parse_config_text(std::string_view text, const std::string& origin) {
  RunConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " +
                                msg);
  };

  for (std::string_view rest = text; !rest.empty() || lineno == 0;) {
    std::size_t nl = rest.find('\n');
    std::string_view raw = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++lineno;

    std::string_view line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = std::string(line.substr(1, line.size() - 2));
      if (section != "network" && section != "flow" && section != "run" &&
          section != "learner")
        fail("unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (section.empty()) fail("key outside any section");
    std::string id = section + "." + key;
    if (id != "flow.interval" && !seen.insert(id).second)
      fail("duplicate key '" + key + "' in [" + section + "]");

    try {
      if (section == "network") {
        if (key == "rows") cfg.rows = parse_int(value);
        else if (key == "cols") cfg.cols = parse_int(value);
        else if (key == "edge_length") cfg.edge_length = parse_double(value);
        else fail("unknown key '" + key + "' in [network]");
      } else if (section == "flow") {
        if (key == "enter_speed") cfg.enter_speed = parse_double(value);
        else if (key == "interval") cfg.flow.push_back(parse_interval(value));
        else fail("unknown key '" + key + "' in [flow]");
      } else if (section == "run") {
        if (key == "seed") {
          long s = parse_long(value);
          if (s < 0) fail("seed must be non-negative");
          cfg.seed = static_cast<std::uint64_t>(s);
        } else if (key == "horizon") cfg.horizon_s = parse_long(value);
        else if (key == "warmup") cfg.warmup_s = parse_long(value);
        else if (key == "train_period") cfg.train_period_s = parse_long(value);
        else if (key == "eval_period") cfg.eval_period_s = parse_long(value);
        else if (key == "decision_interval")
          cfg.decision_interval_s = parse_long(value);
        else if (key == "eval_tail") cfg.eval_tail_s = parse_long(value);
        else if (key == "replay_capacity") {
          long v = parse_long(value);
          if (v < 0) fail("replay_capacity must be non-negative");
          cfg.replay_capacity = static_cast<std::size_t>(v);
        } else if (key == "epsilon0") cfg.epsilon0 = parse_double(value);
        else if (key == "epsilon_decay") cfg.epsilon_decay = parse_double(value);
        else if (key == "eval_epsilon") cfg.eval_epsilon = parse_double(value);
        else if (key == "out_dir") cfg.out_dir = value;
        else fail("unknown key '" + key + "' in [run]");
      } else {  // learner
        algo::LearnerConfig& l = cfg.learner;
        if (key == "algo") l.algo = algo::parse_algo(value);
        else if (key == "identity") l.identity = algo::parse_identity(value);
        else if (key == "rnn") l.rnn = parse_bool(value);
        else if (key == "gamma") l.gamma = parse_double(value);
        else if (key == "lr_q") l.lr_q = parse_double(value);
        else if (key == "lr_actor") l.lr_actor = parse_double(value);
        else if (key == "tau") l.tau = parse_double(value);
        else if (key == "lambda") l.lambda = parse_double(value);
        else if (key == "minibatches") l.minibatches = parse_int(value);
        else if (key == "minibatch_size") l.minibatch_size = parse_int(value);
        else if (key == "rnn_periods") l.rnn_periods = parse_int(value);
        else if (key == "rnn_period_len") l.rnn_period_len = parse_int(value);
        else if (key == "hidden") l.hidden = parse_sizes(value);
        else if (key == "gru_encoder") {
          long v = parse_long(value);
          if (v <= 0) fail("gru_encoder must be positive");
          l.gru_encoder = static_cast<std::size_t>(v);
        } else if (key == "gru_hidden") {
          long v = parse_long(value);
          if (v <= 0) fail("gru_hidden must be positive");
          l.gru_hidden = static_cast<std::size_t>(v);
        }
        else if (key == "agent_weights") l.agent_weights = parse_doubles(value);
        else fail("unknown key '" + key + "' in [learner]");
      }
    } catch (const std::invalid_argument& e) {
      // Re-wrap value parse errors with the file location.
      std::string what = e.what();
      if (what.rfind(origin, 0) == 0) throw;
      fail(what);
    }
  }
  cfg.validate();
  return cfg;
}

std::string config_echo(const RunConfig& cfg) { return canonical(cfg, false); }

std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a64(canonical(cfg, true));
}

}  // namespace gridlight::harness
