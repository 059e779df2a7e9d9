#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "astg/error.hpp"
#include "astg/rng.hpp"
#include "astg/types.hpp"
#include "support.hpp"

using namespace astg;

namespace {

// Independent frame oracle: explicit rotation matrix by -theta where theta is
// the goal bearing.
Vec2 oracle_rotate(Vec2 v, double theta) {
  const double c = std::cos(-theta), s = std::sin(-theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

}  // namespace

TEST(RobotCentric, AlignsGoalWithXAxis) {
  WorldAgentState robot{{0, -4}, {0, 1}, 0.3, {0, 4}, 1.0};
  const JointState js = to_robot_centric(robot, {});
  EXPECT_DOUBLE_EQ(js.robot.goal_distance, 8.0);
  EXPECT_NEAR(js.robot.vx, 1.0, 1e-12);
  EXPECT_NEAR(js.robot.vy, 0.0, 1e-12);
  EXPECT_EQ(js.robot.preferred_speed, 1.0);
  EXPECT_EQ(js.robot.radius, 0.3);
  EXPECT_TRUE(js.humans.empty());
}

TEST(RobotCentric, AlignedFrameKeepsCoordinates) {
  WorldAgentState robot{{0, 0}, {0, 0}, 0.3, {4, 0}, 1.0};
  WorldAgentState human{{1, 0}, {0, 0}, 0.3, {}, 1.0};
  const JointState js = to_robot_centric(robot, std::vector{human});
  ASSERT_EQ(js.humans.size(), 1u);
  EXPECT_NEAR(js.humans[0].px, 1.0, 1e-12);
  EXPECT_NEAR(js.humans[0].py, 0.0, 1e-12);
  EXPECT_NEAR(js.humans[0].distance, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(js.humans[0].radius_sum, 0.6);
}

TEST(RobotCentric, MatchesRotationMatrixOracle) {
  WorldAgentState robot{{1, 1}, {0.5, 0.5}, 0.3, {1, 5}, 1.0};
  WorldAgentState human{{1, 3}, {0, -1}, 0.3, {}, 1.0};
  const JointState js = to_robot_centric(robot, std::vector{human});

  const double theta = std::numbers::pi / 2;  // goal straight up
  const Vec2 rv = oracle_rotate(robot.velocity, theta);
  const Vec2 hp = oracle_rotate(human.position - robot.position, theta);
  const Vec2 hv = oracle_rotate(human.velocity, theta);

  EXPECT_NEAR(js.robot.goal_distance, 4.0, 1e-12);
  EXPECT_NEAR(js.robot.vx, rv.x, 1e-12);
  EXPECT_NEAR(js.robot.vy, rv.y, 1e-12);
  const auto& h = js.humans[0];
  EXPECT_NEAR(h.px, hp.x, 1e-12);
  EXPECT_NEAR(h.py, hp.y, 1e-12);
  EXPECT_NEAR(h.vx, hv.x, 1e-12);
  EXPECT_NEAR(h.vy, hv.y, 1e-12);
  EXPECT_NEAR(h.radius, 0.3, 1e-15);
  EXPECT_NEAR(h.distance, 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(h.radius_sum, 0.6);
  // Spelled out: (2, 0) ahead, velocity (-1, 0) toward the robot.
  EXPECT_NEAR(h.px, 2.0, 1e-12);
  EXPECT_NEAR(h.vx, -1.0, 1e-12);
  EXPECT_NEAR(rv.x, 0.5, 1e-12);
  EXPECT_NEAR(rv.y, -0.5, 1e-12);
}

TEST(RobotCentric, DegenerateGoalUsesIdentityFrame) {
  WorldAgentState robot{{2, 2}, {0.3, 0.4}, 0.3, {2, 2}, 1.0};
  WorldAgentState human{{3, 2}, {0, 1}, 0.3, {}, 1.0};
  const JointState js = to_robot_centric(robot, std::vector{human});
  EXPECT_EQ(js.robot.goal_distance, 0.0);
  EXPECT_EQ(js.robot.vx, 0.3);
  EXPECT_EQ(js.robot.vy, 0.4);
  EXPECT_EQ(js.humans[0].px, 1.0);
  EXPECT_EQ(js.humans[0].vy, 1.0);
}

TEST(RobotCentric, RoundTripRecoversWorldPositions) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto robot = fixtures::random_agent(rng);
    const auto human = fixtures::random_agent(rng);
    const RobotFrame frame(robot);
    const auto hs = observe_human(frame, robot, human);
    const Vec2 back = frame.to_world({hs.px, hs.py});
    EXPECT_NEAR(back.x, human.position.x, 1e-9);
    EXPECT_NEAR(back.y, human.position.y, 1e-9);
    EXPECT_NEAR(hs.distance, std::hypot(hs.px, hs.py), 1e-9);
    EXPECT_EQ(hs.radius_sum, hs.radius + robot.radius);
  }
}

TEST(RobotCentric, EquivariantUnderRigidMotion) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    auto robot = fixtures::random_agent(rng);
    std::vector<WorldAgentState> humans{fixtures::random_agent(rng), fixtures::random_agent(rng)};
    const JointState before = to_robot_centric(robot, humans);

    const double angle = rng.uniform(-3.0, 3.0);
    const Vec2 shift{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const double c = std::cos(angle), s = std::sin(angle);
    auto rot = [&](Vec2 v) { return Vec2{c * v.x - s * v.y, s * v.x + c * v.y}; };
    auto move = [&](WorldAgentState a) {
      a.position = rot(a.position) + shift;
      a.goal = rot(a.goal) + shift;
      a.velocity = rot(a.velocity);
      return a;
    };
    robot = move(robot);
    for (auto& h : humans) h = move(h);
    const JointState after = to_robot_centric(robot, humans);

    const auto rb = before.robot.as_array(), ra = after.robot.as_array();
    for (std::size_t k = 0; k < rb.size(); ++k) EXPECT_NEAR(rb[k], ra[k], 1e-9);
    for (std::size_t i = 0; i < humans.size(); ++i) {
      const auto hb = before.humans[i].as_array(), ha = after.humans[i].as_array();
      for (std::size_t k = 0; k < hb.size(); ++k) EXPECT_NEAR(hb[k], ha[k], 1e-9);
    }
  }
}

TEST(ActionSpace, HasStopPlusEightyActions) {
  const auto actions = build_action_space(1.0);
  ASSERT_EQ(actions.size(), 81u);
  EXPECT_EQ(actions[0].velocity, (Vec2{0, 0}));
  double max_speed = 0.0;
  for (const auto& a : actions) {
    EXPECT_LE(a.velocity.norm(), 1.0 + 1e-12);
    max_speed = std::max(max_speed, a.velocity.norm());
  }
  EXPECT_NEAR(max_speed, 1.0, 1e-12);
}

TEST(ActionSpace, SpeedsAreExponentiallySpaced) {
  const auto speeds = action_speeds(1.0);
  // Rounded evaluation of (e^(k/5) - 1) / (e - 1).
  const double expected[] = {0.129, 0.286, 0.478, 0.713, 1.0};
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(speeds[k], expected[k], 5e-4);
    EXPECT_NEAR(speeds[k], (std::exp((k + 1) / 5.0) - 1.0) / (std::numbers::e - 1.0), 1e-15);
  }
  const auto scaled = action_speeds(2.0);
  EXPECT_DOUBLE_EQ(scaled[4], 2.0);
}

TEST(ActionSpace, SpeedMajorHeadingMinorOrder) {
  const auto actions = build_action_space(1.0);
  const auto speeds = action_speeds(1.0);
  std::set<std::pair<long, long>> seen;
  for (std::size_t s = 0; s < 5; ++s) {
    for (std::size_t h = 0; h < 16; ++h) {
      const Vec2 v = actions[1 + s * 16 + h].velocity;
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(h) / 16.0;
      EXPECT_NEAR(v.x, speeds[s] * std::cos(angle), 1e-12);
      EXPECT_NEAR(v.y, speeds[s] * std::sin(angle), 1e-12);
      seen.insert({std::lround(v.x * 1e9), std::lround(v.y * 1e9)});
    }
  }
  EXPECT_EQ(seen.size(), 80u);
}

TEST(ActionSpace, RejectsNonPositiveSpeed) {
  EXPECT_THROW(build_action_space(0.0), InvalidConfigError);
  EXPECT_THROW(build_action_space(-1.0), InvalidConfigError);
}

TEST(Rng, StreamsAreDeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(1, "scenario"), derive_seed(1, "scenario"));
  EXPECT_NE(derive_seed(1, "scenario"), derive_seed(1, "replay"));
  EXPECT_NE(derive_seed(1, "eval-case", 0), derive_seed(1, "eval-case", 1));
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
  Rng c(10);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(c.index(7), 7u);
  }
}
