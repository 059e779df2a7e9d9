#include "astg/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "astg/error.hpp"

namespace astg::sim {

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::circle_crossing: return "circle";
    case ScenarioKind::scattered_static: return "scattered";
    case ScenarioKind::group_static: return "group";
  }
  return "?";
}

std::string_view to_string(GroupLayout layout) {
  switch (layout) {
    case GroupLayout::DS: return "DS";
    case GroupLayout::RO: return "RO";
    case GroupLayout::CO: return "CO";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(std::string_view text) {
  if (text == "circle" || text == "circle_crossing") return ScenarioKind::circle_crossing;
  if (text == "scattered" || text == "scattered_static") return ScenarioKind::scattered_static;
  if (text == "group" || text == "group_static") return ScenarioKind::group_static;
  throw InvalidConfigError("unknown scenario kind '" + std::string(text) + "'");
}

GroupLayout parse_group_layout(std::string_view text) {
  if (text == "DS") return GroupLayout::DS;
  if (text == "RO") return GroupLayout::RO;
  if (text == "CO") return GroupLayout::CO;
  throw InvalidConfigError("unknown group layout '" + std::string(text) + "'");
}

std::string_view to_string(Cause cause) {
  switch (cause) {
    case Cause::running: return "running";
    case Cause::reached_goal: return "reached_goal";
    case Cause::collision: return "collision";
    case Cause::timeout: return "timeout";
  }
  return "?";
}

Cause parse_cause(std::string_view text) {
  if (text == "running") return Cause::running;
  if (text == "reached_goal") return Cause::reached_goal;
  if (text == "collision") return Cause::collision;
  if (text == "timeout") return Cause::timeout;
  throw LoadError("unknown termination cause '" + std::string(text) + "'");
}

void ScenarioSpec::validate() const {
  if (n_dynamic < 0 || n_static < 0) throw InvalidConfigError("scenario: counts must be >= 0");
  if (!(circle_radius > 0.0)) throw InvalidConfigError("scenario: circle_radius must be > 0");
  if (!(human_radius > 0.0) || !(robot_radius > 0.0)) {
    throw InvalidConfigError("scenario: radii must be > 0");
  }
  if (!(human_speed > 0.0) || !(robot_speed > 0.0)) {
    throw InvalidConfigError("scenario: preferred speeds must be > 0");
  }
  if (angular_jitter < 0.0 || position_jitter < 0.0) {
    throw InvalidConfigError("scenario: jitter must be >= 0");
  }
  if (kind == ScenarioKind::group_static && n_static != 5) {
    throw InvalidConfigError("scenario: group layouts place exactly 5 static humans");
  }
}

void EpisodeConfig::validate() const {
  if (!(dt > 0.0)) throw InvalidConfigError("episode: dt must be > 0");
  if (!(t_limit > dt)) throw InvalidConfigError("episode: t_limit must exceed dt");
  if (!(discomfort_dist >= 0.0)) throw InvalidConfigError("episode: discomfort_dist must be >= 0");
  human_orca.validate();
}

std::vector<WorldAgentState> World::human_states() const {
  std::vector<WorldAgentState> out;
  out.reserve(humans.size());
  for (const auto& h : humans) out.push_back(h.state);
  return out;
}

namespace {

struct Disc {
  Vec2 center;
  double radius;
};

bool clear_of(Vec2 p, double r, std::span<const Disc> taken) {
  return std::all_of(taken.begin(), taken.end(), [&](const Disc& d) {
    return (p - d.center).norm() - r - d.radius > kMinSpawnSeparation;
  });
}

Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Vec2 uniform_in_disc(double radius, Rng& rng) {
  const double r = radius * std::sqrt(rng.uniform());
  const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return {r * std::cos(a), r * std::sin(a)};
}

WorldAgentState static_human(Vec2 position, const ScenarioSpec& spec) {
  WorldAgentState s;
  s.position = position;
  s.goal = position;
  s.radius = spec.human_radius;
  s.preferred_speed = spec.human_speed;
  return s;
}

// Local layouts centred on the origin. Adjacent bodies are 0.8 m apart
// surface-to-surface in RO; CO is an arc wide enough to clear the spawn gap.
std::vector<Vec2> group_offsets(GroupLayout layout, double human_radius) {
  if (layout == GroupLayout::RO) {
    const double pitch = 2.0 * human_radius + 0.8;
    std::vector<Vec2> pts = {{-pitch, 0.0},         {0.0, 0.0},
                             {pitch, 0.0},          {-0.5 * pitch, pitch},
                             {0.5 * pitch, pitch}};
    Vec2 centroid;
    for (auto p : pts) centroid += p;
    centroid = centroid / static_cast<double>(pts.size());
    for (auto& p : pts) p = p - centroid;
    return pts;
  }
  // CO: 5 points over a half circle; the opening faces +x before rotation.
  constexpr double kArcRadius = 1.2;
  std::vector<Vec2> pts;
  for (int k = 0; k < 5; ++k) {
    const double a = std::numbers::pi / 2.0 + k * std::numbers::pi / 4.0;
    pts.push_back({kArcRadius * std::cos(a), kArcRadius * std::sin(a)});
  }
  return pts;
}

}  // namespace

WorldAgentState circle_crossing_human(double angle, const ScenarioSpec& spec, Rng& rng) {
  const double a = angle + spec.angular_jitter * rng.uniform(-1.0, 1.0);
  const Vec2 jitter{spec.position_jitter * rng.uniform(-1.0, 1.0),
                    spec.position_jitter * rng.uniform(-1.0, 1.0)};
  WorldAgentState h;
  h.position = Vec2{spec.circle_radius * std::cos(a), spec.circle_radius * std::sin(a)} + jitter;
  h.goal = -h.position;
  h.radius = spec.human_radius;
  h.preferred_speed = spec.human_speed;
  return h;
}

World generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "scenario"));

  World world;
  world.robot.position = {0.0, -spec.circle_radius};
  world.robot.goal = {0.0, spec.circle_radius};
  world.robot.radius = spec.robot_radius;
  world.robot.preferred_speed = spec.robot_speed;

  // Occupied discs for start positions and for goals.
  std::vector<Disc> starts = {{world.robot.position, spec.robot_radius}};
  std::vector<Disc> goals = {{world.robot.goal, spec.robot_radius}};

  for (int i = 0; i < spec.n_dynamic; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      WorldAgentState h = circle_crossing_human(angle, spec, rng);
      if (clear_of(h.position, h.radius, starts) && clear_of(h.goal, h.radius, goals)) {
        starts.push_back({h.position, h.radius});
        goals.push_back({h.goal, h.radius});
        world.humans.push_back(Human{h, HumanKind::dynamic, false});
        placed = true;
      }
    }
    if (!placed) {
      throw ScenarioError("could not place dynamic human " + std::to_string(i) + " after " +
                          std::to_string(kMaxPlacementAttempts) + " attempts");
    }
  }

  // Statics must clear every start and every goal.
  std::vector<Disc> occupied = starts;
  occupied.insert(occupied.end(), goals.begin(), goals.end());

  const bool grouped =
      spec.kind == ScenarioKind::group_static && spec.layout != GroupLayout::DS;
  if (grouped) {
    const auto offsets = group_offsets(spec.layout, spec.human_radius);
    const double spread = spec.circle_radius - 1.5;
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const Vec2 center = uniform_in_disc(std::max(spread, 0.0), rng);
      const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
      std::vector<Vec2> pts;
      for (auto o : offsets) pts.push_back(center + rotate(o, heading));
      const bool ok = std::all_of(pts.begin(), pts.end(), [&](Vec2 p) {
        return clear_of(p, spec.human_radius, occupied);
      });
      if (ok) {
        for (auto p : pts) world.humans.push_back(Human{static_human(p, spec), HumanKind::fixed, false});
        placed = true;
      }
    }
    if (!placed) throw ScenarioError("could not place static group");
  } else {
    for (int i = 0; i < spec.n_static; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
        const Vec2 p = uniform_in_disc(spec.circle_radius, rng);
        if (clear_of(p, spec.human_radius, occupied)) {
          occupied.push_back({p, spec.human_radius});
          world.humans.push_back(Human{static_human(p, spec), HumanKind::fixed, false});
          placed = true;
        }
      }
      if (!placed) {
        throw ScenarioError("could not place static human " + std::to_string(i) + " after " +
                            std::to_string(kMaxPlacementAttempts) + " attempts");
      }
    }
  }
  return world;
}

double reward_fn(double d_min, bool reached, bool collided, const EpisodeConfig& cfg) {
  if (reached && collided) throw UsageError("reward_fn: reached and collided are exclusive");
  if (reached) return 1.0;
  if (collided) return -0.25;
  if (d_min >= 0.0 && d_min < cfg.discomfort_dist) return -0.1 + d_min / 2.0;
  return 0.0;
}

std::vector<Human> step_humans(std::span<const Human> humans, const EpisodeConfig& cfg) {
  std::vector<WorldAgentState> states;
  states.reserve(humans.size());
  for (const auto& h : humans) states.push_back(h.state);

  std::vector<Human> next(humans.begin(), humans.end());
  std::vector<WorldAgentState> neighbors;
  std::vector<double> share;
  for (std::size_t i = 0; i < humans.size(); ++i) {
    const Human& h = humans[i];
    Action a;
    if (h.kind == HumanKind::dynamic && !h.arrived) {
      neighbors.clear();
      share.clear();
      for (std::size_t j = 0; j < states.size(); ++j) {
        if (j == i) continue;
        neighbors.push_back(states[j]);
        // Static and arrived humans never dodge back.
        const bool moving = humans[j].kind == HumanKind::dynamic && !humans[j].arrived;
        share.push_back(moving ? orca::kReciprocal : orca::kFullResponsibility);
      }
      a = orca::orca_velocity(h.state, neighbors, cfg.human_orca, cfg.dt, share);
    } else {
      a = orca::static_human_policy(h.state);
    }
    next[i].state.velocity = a.velocity;
    next[i].state.position = h.state.position + a.velocity * cfg.dt;
    if (h.kind == HumanKind::dynamic && !h.arrived &&
        (next[i].state.goal - next[i].state.position).norm() < next[i].state.radius) {
      // Arrived humans stay where they are for the rest of the episode.
      next[i].arrived = true;
      next[i].state.velocity = {};
    }
  }
  return next;
}

double min_separation(const WorldAgentState& robot, Vec2 robot_velocity,
                      std::span<const Human> humans_now,
                      std::span<const Human> humans_next, double dt) {
  double d_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < humans_now.size(); ++i) {
    const Vec2 human_velocity =
        (humans_next[i].state.position - humans_now[i].state.position) / dt;
    const double cpa = closest_approach(humans_now[i].state.position - robot.position,
                                        human_velocity - robot_velocity, dt);
    d_min = std::min(d_min, cpa - humans_now[i].state.radius - robot.radius);
  }
  return d_min;
}

StepOutcome step(const World& world, const Action& robot_action, const EpisodeConfig& cfg) {
  if (world.terminal()) throw UsageError("step: episode already terminated");

  StepOutcome out;
  out.next.humans = step_humans(world.humans, cfg);
  out.d_min = min_separation(world.robot, robot_action.velocity, world.humans,
                             out.next.humans, cfg.dt);

  out.next.robot = world.robot;
  out.next.robot.velocity = robot_action.velocity;
  out.next.robot.position = world.robot.position + robot_action.velocity * cfg.dt;
  out.next.steps = world.steps + 1;

  const bool collided = out.d_min < 0.0;
  const bool reached =
      !collided && (out.next.robot.goal - out.next.robot.position).norm() < world.robot.radius;
  const bool timed_out = out.next.time(cfg.dt) >= cfg.t_limit - 1e-9;

  if (collided) {
    out.cause = Cause::collision;
  } else if (reached) {
    out.cause = Cause::reached_goal;
  } else if (timed_out) {
    out.cause = Cause::timeout;
  }
  out.reward = out.cause == Cause::timeout ? 0.0 : reward_fn(out.d_min, reached, collided, cfg);
  out.terminal = out.cause != Cause::running;
  out.next.cause = out.cause;
  return out;
}

}  // namespace astg::sim
