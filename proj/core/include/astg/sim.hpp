#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "astg/orca.hpp"
#include "astg/rng.hpp"
#include "astg/types.hpp"

namespace astg::sim {

enum class ScenarioKind { circle_crossing, scattered_static, group_static };
enum class GroupLayout { DS, RO, CO };

std::string_view to_string(ScenarioKind kind);
std::string_view to_string(GroupLayout layout);
ScenarioKind parse_scenario_kind(std::string_view text);
GroupLayout parse_group_layout(std::string_view text);

/// Minimum surface-to-surface gap between agents (and goals) at spawn.
inline constexpr double kMinSpawnSeparation = 0.2;
inline constexpr int kMaxPlacementAttempts = 1000;

struct ScenarioSpec {
  // Dynamic humans cross the circle in every kind. Static humans are scattered
  // uniformly in the disc, except for group_static where `layout` decides.
  ScenarioKind kind = ScenarioKind::circle_crossing;
  int n_dynamic = 5;
  int n_static = 0;
  GroupLayout layout = GroupLayout::DS;
  double circle_radius = 4.0;
  std::uint64_t seed = 0;

  double human_radius = 0.3;
  double human_speed = 1.0;
  double robot_radius = 0.3;
  double robot_speed = 1.0;
  double angular_jitter = 0.5;   // rad, half-width
  double position_jitter = 0.5;  // m, half-width per axis

  void validate() const;
};

enum class HumanKind { dynamic, fixed };

struct Human {
  WorldAgentState state;
  HumanKind kind = HumanKind::dynamic;
  bool arrived = false;
};

enum class Cause { running, reached_goal, collision, timeout };
std::string_view to_string(Cause cause);
Cause parse_cause(std::string_view text);

/// Complete simulator snapshot.
struct World {
  WorldAgentState robot;
  std::vector<Human> humans;
  std::size_t steps = 0;
  Cause cause = Cause::running;

  bool terminal() const { return cause != Cause::running; }
  double time(double dt) const { return static_cast<double>(steps) * dt; }
  std::vector<WorldAgentState> human_states() const;
};

struct EpisodeConfig {
  double dt = 0.25;
  double t_limit = 25.0;
  double discomfort_dist = 0.2;
  // Humans plan with a little personal space. With none, dense crossings
  // leave the ORCA program infeasible often enough to produce overlaps.
  orca::OrcaParams human_orca{.safety_margin = 0.1};

  void validate() const;
};

struct StepOutcome {
  double reward = 0.0;
  World next;
  bool terminal = false;
  Cause cause = Cause::running;
  /// Closest robot-human surface separation during the step; +inf without
  /// humans, negative on overlap.
  double d_min = std::numeric_limits<double>::infinity();
};

/// Dynamic human on the circle at `angle` (before jitter) with the spec's
/// perturbations drawn from `rng`; goal is the antipodal point of the start.
WorldAgentState circle_crossing_human(double angle, const ScenarioSpec& spec, Rng& rng);

/// Initial snapshot. Deterministic in spec.seed. Throws ScenarioError when a
/// placement cannot be found within kMaxPlacementAttempts.
World generate_scenario(const ScenarioSpec& spec);

double reward_fn(double d_min, bool reached, bool collided, const EpisodeConfig& cfg);

/// Advances all humans by one step. The robot never appears in a human's
/// neighbor list, so this is the full human update.
std::vector<Human> step_humans(std::span<const Human> humans, const EpisodeConfig& cfg);

/// Smallest surface separation between the robot moving with `robot_velocity`
/// and each human moving with its velocity in `humans_next`, over one step.
double min_separation(const WorldAgentState& robot, Vec2 robot_velocity,
                      std::span<const Human> humans_now,
                      std::span<const Human> humans_next, double dt);

/// Throws UsageError when `world` is already terminal.
StepOutcome step(const World& world, const Action& robot_action, const EpisodeConfig& cfg);

}  // namespace astg::sim
