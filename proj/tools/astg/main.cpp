// astg: train, evaluate and roll out the crowd-navigation value network.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "astg/checkpoint.hpp"
#include "astg/config.hpp"
#include "astg/error.hpp"
#include "astg/eval.hpp"
#include "astg/rollout.hpp"
#include "astg/trainer.hpp"

namespace fs = std::filesystem;
using namespace astg;

namespace {

// Flags that map one-to-one onto config keys. Applied after --config.
struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> values;  // config key -> text

  void bind(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

void add_common(CLI::App& app, Overrides& o, bool with_checkpoint) {
  app.add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
  o.bind(app, "--seed", "seed", "root seed");
  o.bind(app, "--scenario", "scenario.kind", "circle, scattered or group");
  o.bind(app, "--dynamic", "scenario.n_dynamic", "number of dynamic humans");
  o.bind(app, "--static", "scenario.n_static", "number of static humans");
  o.bind(app, "--layout", "scenario.layout", "group layout: DS, RO or CO");
  o.bind(app, "--ablation", "network.ablation", "full, spatial_only or temporal_only");
  o.bind(app, "--out", "out", "output directory");
  o.bind(app, "--workers", "workers", "rollout threads (0 = all cores)");
  if (with_checkpoint) {
    o.bind(app, "--checkpoint", "checkpoint", "trained model");
    o.bind(app, "--policy", "policy", "astg or orca");
  } else {
    o.bind(app, "--il-episodes", "train.il_episodes", "demonstration episodes");
    o.bind(app, "--rl-episodes", "train.rl_episodes", "reinforcement episodes");
    o.bind(app, "--checkpoint-interval", "checkpoint_interval", "RL episodes between checkpoints");
  }
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) apply_config_file(cfg, o.config_path);

  // Picking a scenario family also picks its usual static count unless the
  // static count is given as well.
  if (auto it = o.values.find("scenario.kind"); it != o.values.end() && !o.values.contains("scenario.n_static")) {
    const auto kind = sim::parse_scenario_kind(it->second);
    if (kind == sim::ScenarioKind::circle_crossing) cfg.scenario.n_static = 0;
    if (kind == sim::ScenarioKind::group_static) cfg.scenario.n_static = 5;
  }
  for (const auto& [key, value] : o.values) set_config_value(cfg, key, value);
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  const std::string resolved = serialize_config(cfg);
  write_text(out / "config.txt", resolved);
  std::cout << "# resolved config\n" << resolved << std::flush;
  return out;
}

std::string curve_line(const train::CurveEntry& e) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"phase\":\"%s\",\"episode\":%d,\"return\":%.17g,\"outcome\":\"%s\",\"loss\":%.17g,"
                "\"epsilon\":%.17g,\"navigation_time\":%.17g}",
                e.phase.c_str(), e.episode, e.discounted_return,
                std::string(sim::to_string(e.outcome)).c_str(), e.loss, e.epsilon, e.navigation_time);
  return buf;
}

int cmd_train(const RunConfig& cfg) {
  const fs::path out = prepare_out(cfg);
  net::AstgParams params = net::AstgParams::initialize(cfg.network, cfg.seed);
  train::TrainingEnv env{cfg.scenario, cfg.episode, cfg.seed};

  std::ofstream curve(out / "curve.jsonl", std::ios::binary);
  int successes = 0;
  auto sink = [&](const train::CurveEntry& e) {
    curve << curve_line(e) << '\n';
    if (e.phase == "rl") {
      if (e.outcome == sim::Cause::reached_goal) ++successes;
      if (cfg.checkpoint_interval > 0 && (e.episode + 1) % cfg.checkpoint_interval == 0) {
        ad::save_checkpoint(out / ("checkpoint_rl" + std::to_string(e.episode + 1) + ".ckpt"),
                            params.to_checkpoint());
      }
      if ((e.episode + 1) % 50 == 0) {
        std::cout << "rl episode " << e.episode + 1 << "  successes " << successes << "/50  loss "
                  << e.loss << '\n' << std::flush;
        successes = 0;
      }
    } else if (e.phase == "il_epoch") {
      std::cout << "il epoch " << e.episode + 1 << "  loss " << e.loss << '\n' << std::flush;
    }
  };

  if (cfg.train.il_episodes > 0) {
    train::il_pretrain(env, params, cfg.train, sink);
    ad::save_checkpoint(out / "il.ckpt", params.to_checkpoint());
  }
  if (cfg.train.rl_episodes > 0) train::rl_train(env, params, cfg.train, sink);
  ad::save_checkpoint(out / "model.ckpt", params.to_checkpoint());
  std::cout << "wrote " << (out / "model.ckpt").string() << '\n';
  return 0;
}

std::shared_ptr<const net::AstgParams> load_params(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw InvalidConfigError("--checkpoint is required for the astg policy");
  const ad::Checkpoint cp = ad::load_checkpoint(cfg.checkpoint);
  return std::make_shared<const net::AstgParams>(net::AstgParams::from_checkpoint(cp, cfg.network));
}

eval::PolicyFactory policy_factory(const RunConfig& cfg) {
  if (cfg.policy == "orca") {
    return [cfg] { return std::make_unique<OrcaRobotPolicy>(cfg.episode.human_orca, cfg.episode.dt); };
  }
  auto params = load_params(cfg);
  return [cfg, params] {
    return std::make_unique<train::AstgPolicy>(*params, cfg.train.gamma, cfg.episode, 0.0);
  };
}

int cmd_eval(const RunConfig& cfg) {
  auto factory = policy_factory(cfg);
  const fs::path out = prepare_out(cfg);
  eval::EvalOptions options{cfg.cases, cfg.seed, cfg.workers, cfg.train.history_length};
  const auto records = eval::run_eval(cfg.scenario, factory, cfg.episode, options);

  std::ofstream rec_out(out / "episodes.jsonl", std::ios::binary);
  eval::write_records(rec_out, records);
  const auto summary = eval::summarize(records, cfg.episode);
  const std::string report = eval::metrics_report(summary);
  write_text(out / "metrics.txt", report);
  write_text(out / "metrics.json", eval::metrics_json(summary));
  std::cout << report;
  return 0;
}

int cmd_rollout(const RunConfig& cfg) {
  auto factory = policy_factory(cfg);
  const fs::path out = prepare_out(cfg);
  eval::EvalOptions options{1, cfg.seed, 1, cfg.train.history_length};
  const auto records = eval::run_eval(cfg.scenario, factory, cfg.episode, options);

  std::ofstream rec_out(out / "episode.jsonl", std::ios::binary);
  eval::write_records(rec_out, records);
  std::ofstream traj(out / "trajectory.csv", std::ios::binary);
  eval::write_trajectory_csv(traj, records.front());
  std::cout << "outcome " << sim::to_string(records.front().outcome) << " after "
            << records.front().navigation_time << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crowd navigation with an attention-based spatial-temporal graph value network"};
  app.require_subcommand(1);

  Overrides train_o, eval_o, rollout_o;
  auto* train = app.add_subcommand("train", "imitation pretraining followed by reinforcement learning");
  add_common(*train, train_o, false);
  auto* eval = app.add_subcommand("eval", "evaluate a policy on seeded test cases");
  add_common(*eval, eval_o, true);
  eval_o.bind(*eval, "--cases", "cases", "number of evaluation cases");
  auto* rollout = app.add_subcommand("rollout", "run one episode and export its trajectory");
  add_common(*rollout, rollout_o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help is not an error
  }

  try {
    if (train->parsed()) return cmd_train(resolve(train_o));
    if (eval->parsed()) return cmd_eval(resolve(eval_o));
    if (rollout->parsed()) return cmd_rollout(resolve(rollout_o));
  } catch (const InvalidConfigError& e) {
    std::cerr << "astg: invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const LoadError& e) {
    std::cerr << "astg: load error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "astg: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
