#include "astg/types.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "astg/error.hpp"

namespace astg {

RobotFrame::RobotFrame(const WorldAgentState& robot) : origin_(robot.position) {
  const Vec2 to_goal = robot.goal - robot.position;
  const double d = to_goal.norm();
  if (d >= kDegenerateGoalDistance) {
    cos_ = to_goal.x / d;
    sin_ = to_goal.y / d;
  }
}

Vec2 RobotFrame::rotate(Vec2 v) const {
  return {v.x * cos_ + v.y * sin_, -v.x * sin_ + v.y * cos_};
}

Vec2 RobotFrame::to_local(Vec2 p) const { return rotate(p - origin_); }

Vec2 RobotFrame::to_world(Vec2 q) const {
  return Vec2{q.x * cos_ - q.y * sin_, q.x * sin_ + q.y * cos_} + origin_;
}

RobotCentricHumanState observe_human(const RobotFrame& frame,
                                     const WorldAgentState& robot,
                                     const WorldAgentState& human) {
  const Vec2 p = frame.to_local(human.position);
  const Vec2 v = frame.rotate(human.velocity);
  RobotCentricHumanState s;
  s.px = p.x;
  s.py = p.y;
  s.vx = v.x;
  s.vy = v.y;
  s.radius = human.radius;
  s.distance = std::sqrt(p.x * p.x + p.y * p.y);
  s.radius_sum = human.radius + robot.radius;
  return s;
}

JointState to_robot_centric(const WorldAgentState& robot,
                            std::span<const WorldAgentState> humans) {
  const RobotFrame frame(robot);
  JointState state;
  const Vec2 v = frame.rotate(robot.velocity);
  state.robot.goal_distance = (robot.goal - robot.position).norm();
  state.robot.vx = v.x;
  state.robot.vy = v.y;
  state.robot.preferred_speed = robot.preferred_speed;
  state.robot.radius = robot.radius;
  state.humans.reserve(humans.size());
  for (const auto& h : humans) state.humans.push_back(observe_human(frame, robot, h));
  return state;
}

std::array<double, kSpeedLevels> action_speeds(double preferred_speed) {
  std::array<double, kSpeedLevels> speeds{};
  const double denom = std::numbers::e - 1.0;
  for (std::size_t k = 1; k <= kSpeedLevels; ++k) {
    speeds[k - 1] =
        (std::exp(static_cast<double>(k) / kSpeedLevels) - 1.0) / denom * preferred_speed;
  }
  speeds.back() = preferred_speed;  // exact top speed, no rounding drift
  return speeds;
}

std::vector<Action> build_action_space(double preferred_speed) {
  if (!(preferred_speed > 0.0) || !std::isfinite(preferred_speed)) {
    throw InvalidConfigError("action space: preferred speed must be positive, got " +
                             std::to_string(preferred_speed));
  }
  std::vector<Action> actions;
  actions.reserve(kActionCount);
  actions.push_back(Action{});
  for (double speed : action_speeds(preferred_speed)) {
    for (std::size_t h = 0; h < kHeadings; ++h) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(h) / kHeadings;
      actions.push_back(Action{{speed * std::cos(angle), speed * std::sin(angle)}});
    }
  }
  return actions;
}

}  // namespace astg
