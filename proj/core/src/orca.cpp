#include "astg/orca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "astg/error.hpp"

namespace astg::orca {
namespace {

constexpr double kEpsilon = 1e-12;
// Solutions sit exactly on a cone boundary, i.e. agents in contact. A hair of
// extra radius keeps rounding from turning contact into overlap.
constexpr double kContactSlack = 1e-6;

// Optimizes along constraint `line_no` subject to lines [0, line_no) and the
// speed disc. Returns false when the 1-D interval is empty.
bool solve_on_line(std::span<const HalfPlane> lines, std::size_t line_no, double radius,
                   Vec2 opt, bool direction_opt, Vec2& result) {
  const HalfPlane& line = lines[line_no];
  const double dot_product = dot(line.point, line.direction);
  const double discriminant =
      dot_product * dot_product + radius * radius - line.point.norm_sq();
  if (discriminant < 0.0) return false;

  const double sqrt_disc = std::sqrt(discriminant);
  double t_left = -dot_product - sqrt_disc;
  double t_right = -dot_product + sqrt_disc;

  for (std::size_t i = 0; i < line_no; ++i) {
    const double denominator = det(line.direction, lines[i].direction);
    const double numerator = det(lines[i].direction, line.point - lines[i].point);
    if (std::fabs(denominator) <= kEpsilon) {
      // parallel
      if (numerator < 0.0) return false;
      continue;
    }
    const double t = numerator / denominator;
    if (denominator >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) return false;
  }

  if (direction_opt) {
    result = dot(opt, line.direction) > 0.0 ? line.point + t_right * line.direction
                                            : line.point + t_left * line.direction;
  } else {
    const double t = dot(line.direction, opt - line.point);
    const double clamped = std::clamp(t, t_left, t_right);
    result = line.point + clamped * line.direction;
  }
  return true;
}

// Incremental 2-D LP. Returns the index of the first constraint that could not
// be satisfied, or lines.size() on success.
std::size_t solve_2d(std::span<const HalfPlane> lines, double radius, Vec2 opt,
                     bool direction_opt, Vec2& result) {
  if (direction_opt) {
    result = opt * radius;
  } else if (opt.norm_sq() > radius * radius) {
    result = normalized(opt) * radius;
  } else {
    result = opt;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].violation(result) > 0.0) {
      const Vec2 previous = result;
      if (!solve_on_line(lines, i, radius, opt, direction_opt, result)) {
        result = previous;
        return i;
      }
    }
  }
  return lines.size();
}

// 3-D fallback: minimize the maximum violation over constraints from `begin`.
void solve_3d(std::span<const HalfPlane> lines, std::size_t begin, double radius,
              Vec2& result) {
  double distance = 0.0;
  std::vector<HalfPlane> projected;
  for (std::size_t i = begin; i < lines.size(); ++i) {
    if (lines[i].violation(result) <= distance) continue;
    projected.clear();
    for (std::size_t j = 0; j < i; ++j) {
      HalfPlane line;
      const double determinant = det(lines[i].direction, lines[j].direction);
      if (std::fabs(determinant) <= kEpsilon) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) continue;
        line.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        line.point = lines[i].point +
                     (det(lines[j].direction, lines[i].point - lines[j].point) /
                      determinant) *
                         lines[i].direction;
      }
      line.direction = normalized(lines[j].direction - lines[i].direction);
      projected.push_back(line);
    }
    const Vec2 previous = result;
    if (solve_2d(projected, radius, lines[i].normal(), true, result) < projected.size()) {
      // Only reachable through rounding; keep the previous solution.
      result = previous;
    }
    distance = lines[i].violation(result);
  }
}

}  // namespace

void OrcaParams::validate() const {
  if (!(neighbor_dist > 0.0) || !(time_horizon > 0.0) || !(time_horizon_obst > 0.0)) {
    throw InvalidConfigError("orca: neighbor_dist and time horizons must be positive");
  }
  if (max_neighbors < 1) throw InvalidConfigError("orca: max_neighbors must be >= 1");
  if (!(safety_margin >= 0.0)) throw InvalidConfigError("orca: safety_margin must be >= 0");
}

Vec2 preferred_velocity(const WorldAgentState& agent, double dt) {
  const Vec2 to_goal = agent.goal - agent.position;
  const double dist = to_goal.norm();
  if (dist <= 0.0) return {};
  if (dist < agent.preferred_speed * dt) return to_goal / dt;
  return to_goal * (agent.preferred_speed / dist);
}

std::vector<HalfPlane> build_constraints(const WorldAgentState& self,
                                         std::span<const WorldAgentState> neighbors,
                                         const OrcaParams& params, double dt,
                                         std::span<const double> responsibility) {
  if (!responsibility.empty() && responsibility.size() != neighbors.size()) {
    throw DimensionError("orca: responsibility must match the neighbor count");
  }
  // Keep the max_neighbors closest within range, then restore index order.
  std::vector<std::size_t> picked;
  const double range_sq = params.neighbor_dist * params.neighbor_dist;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    if ((neighbors[i].position - self.position).norm_sq() < range_sq) picked.push_back(i);
  }
  if (picked.size() > params.max_neighbors) {
    std::stable_sort(picked.begin(), picked.end(), [&](std::size_t a, std::size_t b) {
      return (neighbors[a].position - self.position).norm_sq() <
             (neighbors[b].position - self.position).norm_sq();
    });
    picked.resize(params.max_neighbors);
    std::sort(picked.begin(), picked.end());
  }

  const double inv_horizon = 1.0 / params.time_horizon;
  std::vector<HalfPlane> lines;
  lines.reserve(picked.size());
  for (std::size_t idx : picked) {
    const WorldAgentState& other = neighbors[idx];
    const Vec2 rel_pos = other.position - self.position;
    const Vec2 rel_vel = self.velocity - other.velocity;
    const double dist_sq = rel_pos.norm_sq();
    const double combined = self.radius + other.radius + params.safety_margin + kContactSlack;
    const double combined_sq = combined * combined;

    HalfPlane line;
    Vec2 u;
    if (dist_sq > combined_sq) {
      const Vec2 w = rel_vel - inv_horizon * rel_pos;
      const double w_len_sq = w.norm_sq();
      const double dot_product = dot(w, rel_pos);
      if (dot_product < 0.0 && dot_product * dot_product > combined_sq * w_len_sq) {
        // cut-off circle
        const double w_len = std::sqrt(w_len_sq);
        const Vec2 unit_w = w / w_len;
        line.direction = {unit_w.y, -unit_w.x};
        u = (combined * inv_horizon - w_len) * unit_w;
      } else {
        const double leg = std::sqrt(dist_sq - combined_sq);
        if (det(rel_pos, w) > 0.0) {
          line.direction = Vec2{rel_pos.x * leg - rel_pos.y * combined,
                                rel_pos.x * combined + rel_pos.y * leg} /
                           dist_sq;
        } else {
          line.direction = -Vec2{rel_pos.x * leg + rel_pos.y * combined,
                                 -rel_pos.x * combined + rel_pos.y * leg} /
                           dist_sq;
        }
        u = dot(rel_vel, line.direction) * line.direction - rel_vel;
      }
    } else {
      // Already overlapping: resolve within one time step.
      const double inv_dt = 1.0 / dt;
      const Vec2 w = rel_vel - inv_dt * rel_pos;
      const double w_len = w.norm();
      const Vec2 unit_w = w_len > 0.0 ? w / w_len : Vec2{1.0, 0.0};
      line.direction = {unit_w.y, -unit_w.x};
      u = (combined * inv_dt - w_len) * unit_w;
    }
    const double share = responsibility.empty() ? kReciprocal : responsibility[idx];
    line.point = self.velocity + share * u;
    lines.push_back(line);
  }
  return lines;
}

Vec2 solve_velocity(std::span<const HalfPlane> constraints, double max_speed,
                    Vec2 preferred) {
  Vec2 result;
  const std::size_t failed = solve_2d(constraints, max_speed, preferred, false, result);
  if (failed < constraints.size()) solve_3d(constraints, failed, max_speed, result);
  const double speed = result.norm();
  if (speed > max_speed) result = result * (max_speed / speed);
  return result;
}

Action orca_velocity(const WorldAgentState& self,
                     std::span<const WorldAgentState> neighbors,
                     const OrcaParams& params, double dt,
                     std::span<const double> responsibility) {
  if (!(dt > 0.0)) throw InvalidConfigError("orca: dt must be positive");
  const Vec2 preferred = preferred_velocity(self, dt);
  const auto lines = build_constraints(self, neighbors, params, dt, responsibility);
  return Action{solve_velocity(lines, self.preferred_speed, preferred)};
}

}  // namespace astg::orca
