#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "astg/rollout.hpp"
#include "astg/sim.hpp"

namespace astg::eval {

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

struct EvalOptions {
  std::size_t cases = 1000;
  std::uint64_t seed = 0;
  // Upper bound on rollout threads; 0 means hardware concurrency.
  unsigned workers = 1;
  std::size_t history_length = net::kDefaultHistoryLength;
};

/// Scenario seed of case `index`. Identical across policies, so every policy
/// sees the same scenes for the same base seed.
std::uint64_t case_seed(std::uint64_t base, std::size_t index);

/// One record per case, in case order regardless of the worker count. Each
/// worker owns its policy instance from `make_policy`.
std::vector<EpisodeRecord> run_eval(const sim::ScenarioSpec& family, const PolicyFactory& make_policy,
                                    const sim::EpisodeConfig& cfg, const EvalOptions& options);

/// Steps of `rec` whose d_min falls below the discomfort distance.
std::size_t discomfort_steps(const EpisodeRecord& rec, const sim::EpisodeConfig& cfg);

struct MetricsSummary {
  std::size_t episodes = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  double disc_freq = 0.0;
  std::optional<double> t_succ_nav;  // absent without successes
  std::optional<double> t_weighted_nav;  // absent when every case timed out
  std::size_t n_succ = 0;
  std::size_t n_coll = 0;
  std::size_t n_timeout = 0;
  std::size_t n_disc = 0;  // over all steps of all episodes
  std::size_t total_steps = 0;
};

/// Weighted navigation time: successes contribute their time plus half a step
/// per discomfort step, collisions contribute t_limit, timeouts are excluded.
/// Throws MetricError when there is neither a success nor a collision.
double weighted_nav_time(std::span<const EpisodeRecord> records, const sim::EpisodeConfig& cfg);

/// Throws UsageError on an empty record list.
MetricsSummary summarize(std::span<const EpisodeRecord> records, const sim::EpisodeConfig& cfg);

// ---- files

inline constexpr int kRecordFormatVersion = 1;

/// One JSON object per line. d_min is null for steps without humans.
std::string record_to_json(const EpisodeRecord& rec);
EpisodeRecord record_from_json(const std::string& line);
void write_records(std::ostream& os, std::span<const EpisodeRecord> records);
std::vector<EpisodeRecord> read_records(std::istream& is);

/// CSV with one row per agent per time step, initial state included:
/// step,time,agent,x,y,vx,vy,radius. Agent 0 is the robot.
void write_trajectory_csv(std::ostream& os, const EpisodeRecord& rec);

std::string metrics_report(const MetricsSummary& m);
std::string metrics_json(const MetricsSummary& m);

}  // namespace astg::eval
