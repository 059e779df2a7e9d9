#include "astg/trainer.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "astg/error.hpp"

namespace astg::train {

int TrainConfig::resolved_decay_episodes() const {
  if (epsilon_decay_episodes >= 0) return epsilon_decay_episodes;
  return static_cast<int>(0.4 * rl_episodes);
}

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidConfigError("train: gamma must lie in (0, 1)");
  if (il_episodes < 0 || rl_episodes < 0) throw InvalidConfigError("train: episode counts must be >= 0");
  if (il_epochs < 0) throw InvalidConfigError("train: il_epochs must be >= 0");
  if (batch_size == 0) throw InvalidConfigError("train: batch_size must be >= 1");
  if (!(il_learning_rate > 0.0) || !(rl_learning_rate > 0.0)) {
    throw InvalidConfigError("train: learning rates must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidConfigError("train: momentum must lie in [0, 1)");
  if (rl_updates_per_step < 0) throw InvalidConfigError("train: rl_updates_per_step must be >= 0");
  if (target_sync_interval < 1) throw InvalidConfigError("train: target_sync_interval must be >= 1");
  if (replay_capacity == 0) throw InvalidConfigError("train: replay_capacity must be >= 1");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 &&
        epsilon_end <= epsilon_start)) {
    throw InvalidConfigError("train: need 0 <= epsilon_end <= epsilon_start <= 1");
  }
  if (!(il_safety_margin >= 0.0)) throw InvalidConfigError("train: il_safety_margin must be >= 0");
  if (!(il_velocity_resample >= 0.0 && il_velocity_resample <= 1.0)) {
    throw InvalidConfigError("train: il_velocity_resample must lie in [0, 1]");
  }
  if (history_length == 0) throw InvalidConfigError("train: history_length must be >= 1");
}

double discount_factor(double gamma, double dt, double preferred_speed) {
  return std::pow(gamma, dt * preferred_speed);
}

double epsilon_at(const TrainConfig& cfg, int episode) {
  const int decay = cfg.resolved_decay_episodes();
  if (decay <= 0 || episode >= decay) return cfg.epsilon_end;
  const double frac = static_cast<double>(episode) / decay;
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma, double dt,
                                       double preferred_speed) {
  const double discount = discount_factor(gamma, dt, preferred_speed);
  std::vector<double> y(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + discount * acc;
    y[i] = acc;
  }
  return y;
}

// ---------------------------------------------------------------- lookahead

double lookahead_reward(const WorldAgentState& robot, const Action& action,
                        std::span<const WorldAgentState> humans, const sim::EpisodeConfig& cfg) {
  double d_min = std::numeric_limits<double>::infinity();
  for (const auto& h : humans) {
    const double cpa =
        closest_approach(h.position - robot.position, h.velocity - action.velocity, cfg.dt);
    d_min = std::min(d_min, cpa - h.radius - robot.radius);
  }
  const bool collided = d_min < 0.0;
  const Vec2 end = robot.position + action.velocity * cfg.dt;
  const bool reached = !collided && (robot.goal - end).norm() < robot.radius;
  return sim::reward_fn(d_min, reached, collided, cfg);
}

Observation propagate(const Observation& obs, const Action& action, double dt) {
  Observation next;
  next.robot = obs.robot;
  next.robot.position = obs.robot.position + action.velocity * dt;
  next.robot.velocity = action.velocity;
  next.humans = obs.humans;
  for (auto& h : next.humans) {
    h.position = h.position + h.velocity * dt;
    h.goal = h.position;
  }
  next.joint = to_robot_centric(next.robot, next.humans);
  next.history = obs.history.with_frame(next.joint.humans);
  return next;
}

ActionScore best_action(const Observation& obs, const net::AstgParams& params,
                        std::span<const Action> actions, double gamma,
                        const sim::EpisodeConfig& cfg) {
  if (actions.empty()) throw InvalidConfigError("select_action: empty action space");
  const double discount = discount_factor(gamma, cfg.dt, obs.robot.preferred_speed);
  ActionScore best{0, -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double reward = lookahead_reward(obs.robot, actions[i], obs.humans, cfg);
    const Observation next = propagate(obs, actions[i], cfg.dt);
    const double score = reward + discount * net::value(next.joint, next.history, params);
    if (score > best.score) best = {i, score};
  }
  return best;
}

Action select_action(const Observation& obs, const net::AstgParams& params,
                     std::span<const Action> actions, double epsilon, double gamma,
                     const sim::EpisodeConfig& cfg, Rng& rng) {
  if (actions.empty()) throw InvalidConfigError("select_action: empty action space");
  if (epsilon > 0.0 && rng.uniform() < epsilon) return actions[rng.index(actions.size())];
  return actions[best_action(obs, params, actions, gamma, cfg).index];
}

AstgPolicy::AstgPolicy(const net::AstgParams& params, double gamma, sim::EpisodeConfig cfg,
                       double epsilon)
    : params_(&params), gamma_(gamma), cfg_(std::move(cfg)), epsilon_(epsilon) {}

Action AstgPolicy::act(const Observation& obs, Rng& rng) {
  if (obs.robot.preferred_speed != actions_speed_) {
    actions_ = build_action_space(obs.robot.preferred_speed);
    actions_speed_ = obs.robot.preferred_speed;
  }
  return select_action(obs, *params_, actions_, epsilon_, gamma_, cfg_, rng);
}

// ---------------------------------------------------------------- replay

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidConfigError("replay buffer capacity must be >= 1");
  items_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  return items_.at((head_ + i) % items_.size());
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (items_.empty()) throw UsageError("replay: cannot sample an empty buffer");
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(&items_[rng.index(items_.size())]);
  return out;
}

// ---------------------------------------------------------------- optimisation

Sgd::Sgd(const net::AstgParams& params, double learning_rate, double momentum)
    : learning_rate_(learning_rate), momentum_(momentum) {
  for (const auto& t : params.named()) velocity_.emplace_back(t.tensor.size(), 0.0);
}

void Sgd::step(net::AstgParams& params) {
  auto named = params.named();
  for (std::size_t p = 0; p < named.size(); ++p) {
    auto values = named[p].tensor.mutable_values();
    const auto grad = named[p].tensor.grad();
    auto& vel = velocity_[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      vel[i] = momentum_ * vel[i] + grad[i];
      values[i] -= learning_rate_ * vel[i];
    }
  }
}

double regression_step(net::AstgParams& params, std::span<const RegressionItem> batch,
                       Sgd& optimizer) {
  if (batch.empty()) throw UsageError("regression_step: empty batch");
  params.zero_grad();
  ad::Tape tape;
  std::vector<ad::Tensor> errors;
  errors.reserve(batch.size());
  for (const auto& item : batch) {
    const ad::Tensor v = net::value_tensor(*item.state, *item.history, params);
    errors.push_back(ad::sub(v, ad::Tensor::scalar(item.target)));
  }
  const ad::Tensor stacked = ad::concat(std::span<const ad::Tensor>(errors), 0);
  const ad::Tensor loss =
      ad::scalar_mul(ad::sum(ad::mul(stacked, stacked)), 1.0 / static_cast<double>(batch.size()));
  const double value = loss.item();
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "training diverged: non-finite loss " << value << " on a batch of " << batch.size();
    throw DivergenceError(os.str());
  }
  tape.backward(loss);
  optimizer.step(params);
  return value;
}

std::vector<ValueSample> label_trace(const EpisodeTrace& trace, double gamma, double dt) {
  const auto& steps = trace.record.steps;
  if (trace.observations.size() != steps.size() + 1) {
    throw UsageError("label_trace: trace was recorded without observations");
  }
  std::vector<double> rewards;
  rewards.reserve(steps.size());
  for (const auto& s : steps) rewards.push_back(s.reward);
  const auto labels =
      discounted_returns(rewards, gamma, dt, trace.record.initial_robot.preferred_speed);
  std::vector<ValueSample> out;
  out.reserve(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) {
    out.push_back({trace.observations[t].joint, trace.observations[t].history, labels[t]});
  }
  return out;
}

double td_target(const Transition& t, const net::AstgParams& target, double gamma) {
  if (t.terminal) return t.reward;
  return t.reward + discount_factor(gamma, t.dt, t.preferred_speed) *
                        net::value(t.next_state, t.next_history, target);
}

// ---------------------------------------------------------------- loops

namespace {

double episode_return(const EpisodeRecord& rec, double gamma, double dt) {
  std::vector<double> rewards;
  for (const auto& s : rec.steps) rewards.push_back(s.reward);
  if (rewards.empty()) return 0.0;
  return discounted_returns(rewards, gamma, dt, rec.initial_robot.preferred_speed).front();
}

sim::ScenarioSpec episode_scenario(const TrainingEnv& env, std::string_view stream, int episode) {
  sim::ScenarioSpec spec = env.scenario;
  spec.seed = derive_seed(env.seed, stream, static_cast<std::uint64_t>(episode));
  return spec;
}

}  // namespace

void il_pretrain(const TrainingEnv& env, net::AstgParams& params, const TrainConfig& cfg,
                 const CurveSink& sink) {
  cfg.validate();
  env.episode.validate();
  if (cfg.il_episodes <= 0) throw InvalidConfigError("il_pretrain: il_episodes must be > 0");

  orca::OrcaParams demo_params = env.episode.human_orca;
  demo_params.safety_margin = cfg.il_safety_margin;
  OrcaRobotPolicy demonstrator(demo_params, env.episode.dt);
  RolloutOptions options{cfg.history_length, true};

  std::vector<ValueSample> samples;
  Rng demo_rng(derive_seed(env.seed, "il-demo"));
  for (int ep = 0; ep < cfg.il_episodes; ++ep) {
    const EpisodeTrace trace = run_episode(episode_scenario(env, "il-scenario", ep), demonstrator,
                                           env.episode, demo_rng, options);
    auto labelled = label_trace(trace, cfg.gamma, env.episode.dt);
    samples.insert(samples.end(), std::make_move_iterator(labelled.begin()),
                   std::make_move_iterator(labelled.end()));
    if (sink) {
      sink({"il_demo", ep, episode_return(trace.record, cfg.gamma, env.episode.dt),
            trace.record.outcome, 0.0, 0.0, trace.record.navigation_time});
    }
  }

  if (cfg.il_velocity_resample > 0.0) {
    const auto speeds = action_speeds(env.scenario.robot_speed);
    Rng aug_rng(derive_seed(env.seed, "il-velocity"));
    for (auto& s : samples) {
      if (aug_rng.uniform() >= cfg.il_velocity_resample) continue;
      const std::size_t k = aug_rng.index(speeds.size() + 1);
      const double speed = k == 0 ? 0.0 : speeds[k - 1];
      const double heading = aug_rng.uniform(0.0, 2.0 * std::numbers::pi);
      s.state.robot.vx = speed * std::cos(heading);
      s.state.robot.vy = speed * std::sin(heading);
    }
  }

  Sgd optimizer(params, cfg.il_learning_rate, cfg.momentum);
  Rng shuffle_rng(derive_seed(env.seed, "il-shuffle"));
  std::vector<std::size_t> order(samples.size());
  std::vector<RegressionItem> batch;
  for (int epoch = 0; epoch < cfg.il_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.index(i)]);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k) {
        const ValueSample& s = samples[order[k]];
        batch.push_back({&s.state, &s.history, s.target});
      }
      loss_sum += regression_step(params, batch, optimizer);
      ++batches;
    }
    if (sink) {
      sink({"il_epoch", epoch, 0.0, sim::Cause::running, batches ? loss_sum / batches : 0.0, 0.0, 0.0});
    }
  }
}

void rl_train(const TrainingEnv& env, net::AstgParams& params, const TrainConfig& cfg,
              const CurveSink& sink) {
  cfg.validate();
  env.episode.validate();

  net::AstgParams target = params.clone();
  ReplayBuffer replay(cfg.replay_capacity);
  Sgd optimizer(params, cfg.rl_learning_rate, cfg.momentum);
  Rng explore_rng(derive_seed(env.seed, "exploration"));
  Rng replay_rng(derive_seed(env.seed, "replay"));
  const auto actions = build_action_space(env.scenario.robot_speed);

  std::vector<RegressionItem> batch;
  std::vector<double> targets;
  for (int ep = 0; ep < cfg.rl_episodes; ++ep) {
    const double epsilon = epsilon_at(cfg, ep);
    sim::World world = sim::generate_scenario(episode_scenario(env, "rl-scenario", ep));
    Observation obs = observe(world, net::HistoryWindow(cfg.history_length));
    std::vector<double> rewards;
    double loss_sum = 0.0;
    int updates = 0;

    while (!world.terminal()) {
      const Action action =
          select_action(obs, params, actions, epsilon, cfg.gamma, env.episode, explore_rng);
      sim::StepOutcome out = sim::step(world, action, env.episode);
      Observation next = observe(out.next, obs.history);
      rewards.push_back(out.reward);
      replay.push(Transition{obs.joint, obs.history, out.reward, next.joint, next.history,
                             out.terminal, env.episode.dt, world.robot.preferred_speed});
      world = std::move(out.next);
      obs = std::move(next);

      if (replay.size() < cfg.batch_size) continue;
      for (int u = 0; u < cfg.rl_updates_per_step; ++u) {
        const auto sampled = replay.sample(cfg.batch_size, replay_rng);
        batch.clear();
        for (const Transition* t : sampled) {
          batch.push_back({&t->state, &t->history, td_target(*t, target, cfg.gamma)});
        }
        loss_sum += regression_step(params, batch, optimizer);
        ++updates;
      }
    }

    if ((ep + 1) % cfg.target_sync_interval == 0) target.copy_values_from(params);
    if (sink) {
      const double ret = rewards.empty()
                             ? 0.0
                             : discounted_returns(rewards, cfg.gamma, env.episode.dt,
                                                  env.scenario.robot_speed)
                                   .front();
      sink({"rl", ep, ret, world.cause, updates ? loss_sum / updates : 0.0, epsilon,
            world.time(env.episode.dt)});
    }
  }
}

}  // namespace astg::train
