#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "astg/types.hpp"

namespace astg::orca {

struct OrcaParams {
  double neighbor_dist = 10.0;
  double time_horizon = 5.0;
  // Kept for config compatibility; there are no static obstacles.
  double time_horizon_obst = 5.0;
  std::size_t max_neighbors = 10;
  // Added to the combined radius of every pair. Zero is accepted.
  double safety_margin = 0.0;

  /// Throws InvalidConfigError on non-positive horizons/distances.
  void validate() const;
};

/// Velocity-space constraint: feasible velocities lie to the left of the
/// directed line through `point` along `direction`.
struct HalfPlane {
  Vec2 point;
  Vec2 direction;

  Vec2 normal() const { return {-direction.y, direction.x}; }
  /// Positive when v violates the constraint.
  double violation(Vec2 v) const { return det(direction, point - v); }
};

/// Preferred velocity toward the agent's goal, clipped so the agent does not
/// overshoot a goal closer than v_pref * dt.
Vec2 preferred_velocity(const WorldAgentState& agent, double dt);

// Share of each avoidance maneuver `self` takes on. ORCA splits it evenly;
// a neighbor that never reacts (frozen, static, or blind to self) needs 1.
inline constexpr double kReciprocal = 0.5;
inline constexpr double kFullResponsibility = 1.0;

/// Half-planes for `self` against each neighbor, in neighbor order.
/// `responsibility` is per neighbor; empty means reciprocal for all.
std::vector<HalfPlane> build_constraints(const WorldAgentState& self,
                                         std::span<const WorldAgentState> neighbors,
                                         const OrcaParams& params, double dt,
                                         std::span<const double> responsibility = {});

/// Velocity closest to `preferred` inside the speed disc and all half-planes.
/// Falls back to minimizing the largest violation when the 2-D program is
/// infeasible.
Vec2 solve_velocity(std::span<const HalfPlane> constraints, double max_speed,
                    Vec2 preferred);

/// ORCA velocity for `self`. The neighbor list must not contain `self`.
Action orca_velocity(const WorldAgentState& self,
                     std::span<const WorldAgentState> neighbors,
                     const OrcaParams& params, double dt,
                     std::span<const double> responsibility = {});

inline Action static_human_policy(const WorldAgentState& /*self*/) { return Action{}; }

}  // namespace astg::orca
