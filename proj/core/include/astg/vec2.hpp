#pragma once

#include <cmath>

namespace astg {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double norm_sq() const { return x * x + y * y; }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
/// z-component of the 3-D cross product.
constexpr double det(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

inline Vec2 normalized(Vec2 v) {
  const double n = v.norm();
  return n > 0.0 ? v / n : Vec2{};
}

/// Minimum distance between two points moving linearly over [0, duration],
/// given their relative position and relative velocity at t = 0.
inline double closest_approach(Vec2 rel_pos, Vec2 rel_vel, double duration) {
  const double vv = rel_vel.norm_sq();
  double t = 0.0;
  if (vv > 0.0) {
    t = -dot(rel_pos, rel_vel) / vv;
    if (t < 0.0) t = 0.0;
    if (t > duration) t = duration;
  }
  return (rel_pos + rel_vel * t).norm();
}

}  // namespace astg
