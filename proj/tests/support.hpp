#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "astg/network.hpp"
#include "astg/rng.hpp"
#include "astg/types.hpp"

namespace astg::fixtures {

inline WorldAgentState random_agent(Rng& rng, double spread = 4.0) {
  WorldAgentState a;
  a.position = {rng.uniform(-spread, spread), rng.uniform(-spread, spread)};
  a.velocity = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  a.radius = rng.uniform(0.2, 0.4);
  a.goal = {rng.uniform(-spread, spread), rng.uniform(-spread, spread)};
  a.preferred_speed = rng.uniform(0.5, 1.5);
  return a;
}

struct RandomState {
  WorldAgentState robot;
  std::vector<WorldAgentState> humans;  // current frame
  JointState joint;
  net::HistoryWindow history;
};

/// A robot and n humans with a `frames`-long history of random-walk motion.
inline RandomState random_state(Rng& rng, std::size_t n, std::size_t frames) {
  RandomState s{random_agent(rng), {}, {}, net::HistoryWindow(std::max<std::size_t>(frames, 1))};
  std::vector<WorldAgentState> humans;
  for (std::size_t i = 0; i < n; ++i) humans.push_back(random_agent(rng));
  for (std::size_t t = 0; t < frames; ++t) {
    for (auto& h : humans) {
      h.velocity = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      h.position = h.position + h.velocity * 0.25;
    }
    s.history.push(to_robot_centric(s.robot, humans).humans);
  }
  s.humans = humans;
  s.joint = to_robot_centric(s.robot, humans);
  return s;
}

/// Central finite difference of `f` with respect to every entry of `values`.
inline std::vector<double> numeric_gradient(std::span<double> values, const std::function<double()>& f,
                                            double eps = 1e-5) {
  std::vector<double> g(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + eps;
    const double up = f();
    values[i] = saved - eps;
    const double down = f();
    values[i] = saved;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps entries whose true
/// derivative is zero from dividing rounding noise by zero.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace astg::fixtures
