#include "astg/rollout.hpp"

namespace astg {

Observation observe(const sim::World& world, const net::HistoryWindow& previous) {
  Observation obs{world.robot, {}, {}, previous};
  obs.humans.reserve(world.humans.size());
  for (const auto& h : world.humans) {
    WorldAgentState seen;
    seen.position = h.state.position;
    seen.velocity = h.state.velocity;
    seen.radius = h.state.radius;
    seen.goal = h.state.position;
    seen.preferred_speed = 0.0;
    obs.humans.push_back(seen);
  }
  obs.joint = to_robot_centric(obs.robot, obs.humans);
  obs.history.push(obs.joint.humans);
  return obs;
}

Action OrcaRobotPolicy::act(const Observation& obs, Rng& /*rng*/) {
  // Humans cannot see the robot, so it does all of the avoiding.
  const std::vector<double> share(obs.humans.size(), orca::kFullResponsibility);
  return orca::orca_velocity(obs.robot, obs.humans, params_, dt_, share);
}

Action RandomPolicy::act(const Observation& /*obs*/, Rng& rng) {
  return actions_[rng.index(actions_.size())];
}

EpisodeTrace run_episode(const sim::ScenarioSpec& scenario, Policy& policy,
                         const sim::EpisodeConfig& cfg, Rng& rng,
                         const RolloutOptions& options) {
  cfg.validate();
  EpisodeTrace trace;
  EpisodeRecord& rec = trace.record;
  rec.seed = scenario.seed;
  rec.scenario = scenario;
  rec.policy = std::string(policy.name());

  sim::World world = sim::generate_scenario(scenario);
  rec.initial_robot = world.robot;
  rec.initial_humans = world.human_states();

  Observation obs = observe(world, net::HistoryWindow(options.history_length));
  while (!world.terminal()) {
    const Action action = policy.act(obs, rng);
    sim::StepOutcome out = sim::step(world, action, cfg);
    StepRecord s;
    s.time = out.next.time(cfg.dt);
    s.robot = out.next.robot;
    s.humans = out.next.human_states();
    s.action = action;
    s.reward = out.reward;
    s.d_min = out.d_min;
    rec.steps.push_back(std::move(s));
    world = std::move(out.next);

    Observation next = observe(world, obs.history);
    if (options.keep_observations) trace.observations.push_back(std::move(obs));
    obs = std::move(next);
  }
  if (options.keep_observations) trace.observations.push_back(std::move(obs));
  rec.outcome = world.cause;
  rec.navigation_time = world.time(cfg.dt);
  return trace;
}

}  // namespace astg
