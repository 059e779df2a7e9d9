#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "astg/vec2.hpp"

namespace astg {

/// World-frame state of one agent. Goal and preferred speed are hidden from
/// other agents; for observed humans they are only used inside the simulator.
struct WorldAgentState {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.3;
  Vec2 goal;
  double preferred_speed = 1.0;
};

/// Robot part of the robot-centric observation: [d_g, v_x, v_y, v_pref, r].
struct RobotCentricRobotState {
  static constexpr std::size_t kWidth = 5;

  double goal_distance = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double preferred_speed = 0.0;
  double radius = 0.0;

  std::array<double, kWidth> as_array() const {
    return {goal_distance, vx, vy, preferred_speed, radius};
  }
};

/// One human in the robot frame: [p_x, p_y, v_x, v_y, r_i, d_i, r_i + r].
struct RobotCentricHumanState {
  static constexpr std::size_t kWidth = 7;

  double px = 0.0;
  double py = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double radius = 0.0;
  double distance = 0.0;
  double radius_sum = 0.0;

  std::array<double, kWidth> as_array() const {
    return {px, py, vx, vy, radius, distance, radius_sum};
  }
};

struct JointState {
  RobotCentricRobotState robot;
  std::vector<RobotCentricHumanState> humans;

  std::size_t human_count() const { return humans.size(); }
};

/// Holonomic velocity command in the world frame.
struct Action {
  Vec2 velocity;

  constexpr bool operator==(const Action&) const = default;
};

/// Rigid transform into the robot-centric frame: origin at the robot, x-axis
/// toward the goal. Falls back to the identity rotation when the robot sits on
/// its goal (d_g < 1e-9).
class RobotFrame {
 public:
  static constexpr double kDegenerateGoalDistance = 1e-9;

  explicit RobotFrame(const WorldAgentState& robot);

  Vec2 rotate(Vec2 world_vector) const;
  Vec2 to_local(Vec2 world_point) const;
  Vec2 to_world(Vec2 local_point) const;

  Vec2 origin() const { return origin_; }
  double cos_angle() const { return cos_; }
  double sin_angle() const { return sin_; }

 private:
  Vec2 origin_;
  double cos_ = 1.0;
  double sin_ = 0.0;
};

JointState to_robot_centric(const WorldAgentState& robot,
                            std::span<const WorldAgentState> humans);

/// Observation-only human record; `to_robot_centric` ignores goals anyway.
RobotCentricHumanState observe_human(const RobotFrame& frame,
                                     const WorldAgentState& robot,
                                     const WorldAgentState& human);

/// Number of speed levels and headings in the discrete action set.
inline constexpr std::size_t kSpeedLevels = 5;
inline constexpr std::size_t kHeadings = 16;
inline constexpr std::size_t kActionCount = kSpeedLevels * kHeadings + 1;

/// Speeds (e^{k/5} - 1) / (e - 1) * v_pref for k = 1..5.
std::array<double, kSpeedLevels> action_speeds(double preferred_speed);

/// Index 0 is the stop action; then speed-major, heading-minor.
/// Throws InvalidConfigError when preferred_speed <= 0.
std::vector<Action> build_action_space(double preferred_speed);

}  // namespace astg
