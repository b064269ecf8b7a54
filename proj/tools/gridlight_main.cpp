#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridlight/core/text.hpp"
#include "gridlight/harness/config.hpp"
#include "gridlight/harness/runner.hpp"

namespace {

using namespace gridlight;

harness::RunConfig load_config(const std::string& path, long seed_override,
                               const std::string& algo_override,
                               bool rnn_override,
                               const std::string& out_override) {
  harness::RunConfig cfg = harness::parse_config(path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  if (!algo_override.empty()) cfg.learner.algo = algo::parse_algo(algo_override);
  if (rnn_override) cfg.learner.rnn = true;
  if (!out_override.empty()) cfg.out_dir = out_override;
  cfg.validate();
  return cfg;
}

void run_frozen(const harness::RunConfig& cfg, const std::string& ckpt_path,
                const std::string& policy_kind, const std::string& command) {
  if (!ckpt_path.empty()) {
    std::unique_ptr<algo::Learner> learner =
        harness::load_policy_learner(cfg, ckpt_path);
    harness::LearnerPolicy policy(*learner, cfg.eval_epsilon);
    harness::run_policy(cfg, policy, command, {"checkpoint = " + ckpt_path});
  } else {
    std::unique_ptr<harness::Policy> policy =
        harness::make_reference_policy(policy_kind);
    harness::run_policy(cfg, *policy, command, {"policy = " + policy_kind});
  }
  std::cout << command << " complete: " << cfg.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridlight: grid traffic-signal control, training and evaluation"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, policy_kind, algo_name, out_dir;
  std::string lambda_list;
  long seed = -1;
  bool rnn = false;

  CLI::App* train = app.add_subcommand("train", "train a learner (or drive a reference policy) over the full schedule");
  train->add_option("--config", config_path, "run configuration file")->required();
  train->add_option("--seed", seed, "override the config seed");
  train->add_option("--algo", algo_name, "override the learner algorithm (qcombo|idqn|iac|vdn|qmix|coma)");
  train->add_flag("--rnn", rnn, "use recurrent value/policy heads");
  train->add_option("--policy", policy_kind, "run a fixed reference policy (static|random) instead of a learner");
  train->add_option("--out", out_dir, "override the output directory");

  CLI::App* eval = app.add_subcommand("eval", "execute a frozen policy over the configured flow program");
  eval->add_option("--checkpoint", ckpt_path, "trained checkpoint to execute");
  eval->add_option("--config", config_path, "evaluation configuration file")->required();
  eval->add_option("--policy", policy_kind, "reference policy (static|random) instead of a checkpoint");
  eval->add_option("--out", out_dir, "override the output directory");

  CLI::App* transfer = app.add_subcommand("transfer", "execute a checkpoint on a different network topology");
  transfer->add_option("--checkpoint", ckpt_path, "trained checkpoint to execute")->required();
  transfer->add_option("--target-config", config_path, "target-network configuration file")->required();
  transfer->add_option("--out", out_dir, "override the output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "train the coupled learner once per consistency weight");
  sweep->add_option("--lambda", lambda_list, "comma-separated consistency weights, e.g. 0,0.5,1")->required();
  sweep->add_option("--config", config_path, "run configuration file")->required();
  sweep->add_option("--seed", seed, "override the config seed");
  sweep->add_option("--out", out_dir, "override the base output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train)) {
      if (!policy_kind.empty() && !algo_name.empty())
        throw std::invalid_argument("train: --policy and --algo are mutually exclusive");
      harness::RunConfig cfg =
          load_config(config_path, seed, algo_name, rnn, out_dir);
      if (!policy_kind.empty()) {
        harness::run_reference(cfg, policy_kind);
        std::cout << "reference run complete: " << cfg.out_dir << "\n";
      } else {
        harness::TrainResult result = harness::run_training(cfg);
        std::cout << "training complete: " << cfg.out_dir << " ("
                  << result.checkpoints.size() << " cycles)\n";
      }
    } else if (app.got_subcommand(eval)) {
      if (ckpt_path.empty() == policy_kind.empty())
        throw std::invalid_argument("eval: pass exactly one of --checkpoint and --policy");
      harness::RunConfig cfg = load_config(config_path, -1, "", false, out_dir);
      run_frozen(cfg, ckpt_path, policy_kind, "eval");
    } else if (app.got_subcommand(transfer)) {
      harness::RunConfig cfg = load_config(config_path, -1, "", false, out_dir);
      run_frozen(cfg, ckpt_path, "", "transfer");
    } else if (app.got_subcommand(sweep)) {
      harness::RunConfig base =
          load_config(config_path, seed, "", false, out_dir);
      if (base.learner.algo != algo::Algo::qcombo)
        throw std::invalid_argument(
            "sweep: consistency-weight sweeps need algo = qcombo");
      for (const std::string& tok : split(lambda_list, ',')) {
        double lambda = parse_double(trim(tok));
        if (lambda < 0.0)
          throw std::invalid_argument("sweep: lambda must be non-negative");
        harness::RunConfig cfg = base;
        cfg.learner.lambda = lambda;
        cfg.out_dir = base.out_dir + "/lambda_" + format_double(lambda);
        harness::run_training(cfg);
        std::cout << "lambda " << format_double(lambda)
                  << " complete: " << cfg.out_dir << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "gridlight: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
