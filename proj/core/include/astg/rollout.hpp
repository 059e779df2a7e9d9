#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "astg/network.hpp"
#include "astg/orca.hpp"
#include "astg/rng.hpp"
#include "astg/sim.hpp"
#include "astg/types.hpp"

namespace astg {

/// What a robot policy sees at a decision point. `humans` carries observable
/// fields only (goal = position, preferred speed = 0).
struct Observation {
  WorldAgentState robot;
  std::vector<WorldAgentState> humans;
  JointState joint;
  net::HistoryWindow history;  // newest frame == joint.humans
};

Observation observe(const sim::World& world, const net::HistoryWindow& previous);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const Observation& obs, Rng& rng) = 0;
  virtual std::string_view name() const = 0;
};

/// The robot as an ORCA agent that sees every human.
class OrcaRobotPolicy final : public Policy {
 public:
  OrcaRobotPolicy(orca::OrcaParams params, double dt) : params_(params), dt_(dt) {}
  Action act(const Observation& obs, Rng& rng) override;
  std::string_view name() const override { return "orca"; }

 private:
  orca::OrcaParams params_;
  double dt_;
};

/// Uniform over the discrete action set.
class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(double preferred_speed) : actions_(build_action_space(preferred_speed)) {}
  Action act(const Observation& obs, Rng& rng) override;
  std::string_view name() const override { return "random"; }

 private:
  std::vector<Action> actions_;
};

struct StepRecord {
  double time = 0.0;  // after the step
  WorldAgentState robot;
  std::vector<WorldAgentState> humans;
  Action action;
  double reward = 0.0;
  double d_min = 0.0;
};

/// One finished episode, serialisable to a line-delimited record.
struct EpisodeRecord {
  std::uint64_t seed = 0;
  sim::ScenarioSpec scenario;
  std::string policy;
  WorldAgentState initial_robot;
  std::vector<WorldAgentState> initial_humans;
  std::vector<StepRecord> steps;
  sim::Cause outcome = sim::Cause::running;
  double navigation_time = 0.0;
};

/// Record plus the observations the policy saw; observations has one more
/// entry than record.steps (the terminal observation).
struct EpisodeTrace {
  EpisodeRecord record;
  std::vector<Observation> observations;
};

struct RolloutOptions {
  std::size_t history_length = net::kDefaultHistoryLength;
  bool keep_observations = false;
};

EpisodeTrace run_episode(const sim::ScenarioSpec& scenario, Policy& policy,
                         const sim::EpisodeConfig& cfg, Rng& rng,
                         const RolloutOptions& options = {});

}  // namespace astg
