#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "astg/error.hpp"
#include "astg/orca.hpp"
#include "astg/rng.hpp"

using namespace astg;
using namespace astg::orca;

namespace {

WorldAgentState agent(Vec2 p, Vec2 v, Vec2 goal, double r = 0.3, double vp = 1.0) {
  return {p, v, r, goal, vp};
}

// Smallest separation between two discs moving linearly for `horizon`
// seconds, sampled finely enough to be an independent check of the closed
// form used elsewhere.
double sampled_min_gap(Vec2 pa, Vec2 va, Vec2 pb, Vec2 vb, double horizon) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 5000; ++i) {
    const double t = horizon * i / 5000.0;
    best = std::min(best, ((pa + va * t) - (pb + vb * t)).norm());
  }
  return best;
}

}  // namespace

TEST(Orca, UnconstrainedReturnsPreferredVelocity) {
  const auto a = agent({0, 0}, {0, 0}, {4, 0});
  const Action out = orca_velocity(a, {}, OrcaParams{}, 0.25);
  EXPECT_NEAR(out.velocity.x, 1.0, 1e-12);
  EXPECT_NEAR(out.velocity.y, 0.0, 1e-12);
}

TEST(Orca, ClipsPreferredVelocityNearGoal) {
  const auto a = agent({0, 0}, {0, 0}, {0.1, 0.0});
  const Action out = orca_velocity(a, {}, OrcaParams{}, 0.25);
  EXPECT_NEAR(out.velocity.norm(), 0.1 / 0.25, 1e-12);
}

TEST(Orca, RejectsNonPositiveDt) {
  const auto a = agent({0, 0}, {0, 0}, {4, 0});
  EXPECT_THROW(orca_velocity(a, {}, OrcaParams{}, 0.0), InvalidConfigError);
}

TEST(Orca, ParamsValidate) {
  OrcaParams p;
  EXPECT_NO_THROW(p.validate());
  p.max_neighbors = 0;
  EXPECT_THROW(p.validate(), InvalidConfigError);
  p = {};
  p.time_horizon = 0.0;
  EXPECT_THROW(p.validate(), InvalidConfigError);
}

TEST(Orca, HeadOnPairLiesInSampledSafeSet) {
  const OrcaParams params;
  const double dt = 0.25;
  const auto a = agent({-2, 0}, {1, 0}, {2, 0});
  const auto b = agent({2, 0}, {-1, 0}, {-2, 0});
  const Vec2 va = orca_velocity(a, std::vector{b}, params, dt).velocity;
  const Vec2 vb = orca_velocity(b, std::vector{a}, params, dt).velocity;
  const double rsum = a.radius + b.radius;

  // Brute-force safe set for each agent given the other's ORCA velocity.
  Rng rng(123);
  std::size_t safe_a = 0, safe_b = 0;
  Vec2 best_a, best_b;
  double best_da = 1e9, best_db = 1e9;
  for (int i = 0; i < 10000; ++i) {
    const double rad = std::sqrt(rng.uniform()) * 1.0;
    const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Vec2 v{rad * std::cos(ang), rad * std::sin(ang)};
    if (sampled_min_gap(a.position, v, b.position, vb, params.time_horizon) > rsum) {
      ++safe_a;
      if ((v - Vec2{1, 0}).norm() < best_da) best_da = (v - Vec2{1, 0}).norm(), best_a = v;
    }
    if (sampled_min_gap(b.position, v, a.position, va, params.time_horizon) > rsum) {
      ++safe_b;
      if ((v - Vec2{-1, 0}).norm() < best_db) best_db = (v - Vec2{-1, 0}).norm(), best_b = v;
    }
  }
  ASSERT_GT(safe_a, 0u);
  ASSERT_GT(safe_b, 0u);

  // ORCA puts the relative velocity on the boundary of the truncated cone, so
  // the pair may touch at exactly the radius sum; allow rounding only.
  EXPECT_GE(sampled_min_gap(a.position, va, b.position, vb, params.time_horizon), rsum - 1e-9);
  EXPECT_LE(va.norm(), 1.0 + 1e-9);
  EXPECT_LE(vb.norm(), 1.0 + 1e-9);
  // ORCA should be at least as close to preferred as the sampled optimum, up
  // to the sampling resolution.
  EXPECT_LE((va - Vec2{1, 0}).norm(), best_da + 0.05);
  EXPECT_LE((vb - Vec2{-1, 0}).norm(), best_db + 0.05);
}

TEST(Orca, PointSymmetricPairGivesOppositeVelocities) {
  Rng rng(77);
  const OrcaParams params;
  for (int trial = 0; trial < 200; ++trial) {
    const Vec2 p{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    if (p.norm() < 0.5) continue;
    const Vec2 v{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Vec2 g{rng.uniform(-4, 4), rng.uniform(-4, 4)};
    const auto a = agent(p, v, g);
    const auto b = agent(-p, -v, -g);
    const Vec2 va = orca_velocity(a, std::vector{b}, params, 0.25).velocity;
    const Vec2 vb = orca_velocity(b, std::vector{a}, params, 0.25).velocity;
    EXPECT_NEAR(va.x, -vb.x, 1e-6);
    EXPECT_NEAR(va.y, -vb.y, 1e-6);
  }
}

TEST(Orca, HeadOnPairIsPointSymmetric) {
  const auto a = agent({-2, 0}, {1, 0}, {2, 0});
  const auto b = agent({2, 0}, {-1, 0}, {-2, 0});
  const Vec2 va = orca_velocity(a, std::vector{b}, OrcaParams{}, 0.25).velocity;
  const Vec2 vb = orca_velocity(b, std::vector{a}, OrcaParams{}, 0.25).velocity;
  EXPECT_NEAR(va.x, -vb.x, 1e-6);
  EXPECT_NEAR(va.y, -vb.y, 1e-6);
  EXPECT_GT(std::abs(va.y), 1e-3);  // they do sidestep
}

TEST(Orca, SpeedNeverExceedsPreferred) {
  Rng rng(3);
  const OrcaParams params;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<WorldAgentState> crowd;
    for (int i = 0; i < 6; ++i) {
      crowd.push_back(agent({rng.uniform(-3, 3), rng.uniform(-3, 3)},
                            {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                            {rng.uniform(-4, 4), rng.uniform(-4, 4)}, 0.3, rng.uniform(0.5, 1.5)));
    }
    for (std::size_t i = 0; i < crowd.size(); ++i) {
      std::vector<WorldAgentState> others;
      for (std::size_t j = 0; j < crowd.size(); ++j) {
        if (j != i) others.push_back(crowd[j]);
      }
      const Vec2 v = orca_velocity(crowd[i], others, params, 0.25).velocity;
      EXPECT_LE(v.norm(), crowd[i].preferred_speed + 1e-9);
      EXPECT_TRUE(std::isfinite(v.x) && std::isfinite(v.y));
    }
  }
}

TEST(Orca, ConstraintsHaveUnitDirections) {
  const auto a = agent({0, 0}, {1, 0}, {4, 0});
  std::vector<WorldAgentState> others{agent({1.5, 0.2}, {-1, 0}, {-4, 0}),
                                      agent({0.0, 2.0}, {0, -1}, {0, -4})};
  const auto planes = build_constraints(a, others, OrcaParams{}, 0.25);
  ASSERT_EQ(planes.size(), 2u);
  for (const auto& hp : planes) EXPECT_NEAR(hp.direction.norm(), 1.0, 1e-9);
}

TEST(Orca, OverlappingAgentsStillGetAFiniteVelocity) {
  const auto a = agent({0, 0}, {1, 0}, {4, 0});
  const auto b = agent({0.3, 0}, {-1, 0}, {-4, 0});
  const Vec2 v = orca_velocity(a, std::vector{b}, OrcaParams{}, 0.25).velocity;
  EXPECT_TRUE(std::isfinite(v.x) && std::isfinite(v.y));
  EXPECT_LE(v.norm(), 1.0 + 1e-9);
}

TEST(StaticHuman, AlwaysStill) {
  const auto a = agent({1, 1}, {0.5, 0}, {3, 3});
  EXPECT_EQ(static_human_policy(a).velocity, (Vec2{0, 0}));
  EXPECT_EQ(static_human_policy(a).velocity, static_human_policy(a).velocity);
}

TEST(Orca, FullResponsibilityClearsAStillNeighbor) {
  // Walking straight at someone who will not move.
  const OrcaParams params;
  auto a = agent({-2, 0.05}, {1, 0}, {2, 0.05});
  const auto still = agent({0, 0}, {0, 0}, {0, 0});
  const double share[] = {kFullResponsibility};
  double closest = 1e9;
  for (int step = 0; step < 20; ++step) {
    const Vec2 v = orca_velocity(a, std::vector{still}, params, 0.25, share).velocity;
    closest = std::min(closest, sampled_min_gap(a.position, v, still.position, {}, 0.25));
    a.position = a.position + v * 0.25;
    a.velocity = v;
  }
  EXPECT_GE(closest, a.radius + still.radius);
  EXPECT_GT(a.position.x, 0.5);  // got past
}

TEST(Orca, ResponsibilityMustMatchNeighbors) {
  const auto a = agent({0, 0}, {1, 0}, {4, 0});
  const double share[] = {1.0, 1.0};
  EXPECT_THROW(orca_velocity(a, std::vector{agent({2, 0}, {}, {})}, OrcaParams{}, 0.25, share), DimensionError);
}
