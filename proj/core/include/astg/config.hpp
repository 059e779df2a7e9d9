#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "astg/network.hpp"
#include "astg/sim.hpp"
#include "astg/trainer.hpp"

namespace astg {

/// Everything a run needs, resolved from defaults, a config file and flags.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string checkpoint;  // input for eval/rollout; empty in train
  std::string policy = "astg";
  std::size_t cases = 1000;
  unsigned workers = 1;
  // RL episodes between intermediate checkpoints, 0 for the final one only.
  int checkpoint_interval = 0;

  sim::ScenarioSpec scenario = default_scenario();
  sim::EpisodeConfig episode;
  net::NetworkDims network;
  train::TrainConfig train;

  /// Scattered scene, 5 dynamic and 2 static humans.
  static sim::ScenarioSpec default_scenario();

  void validate() const;
};

/// Sets one `key` from its textual value. Throws InvalidConfigError for an
/// unknown key or an unparsable value.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// `key = value` lines; `#` starts a comment. Applied on top of `cfg`.
void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin = "config");
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Every key in a stable order, doubles at full precision, so that
/// apply_config_text(RunConfig{}, serialize_config(c)) reproduces c.
std::string serialize_config(const RunConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace astg
