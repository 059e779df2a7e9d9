#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "astg/network.hpp"
#include "astg/rollout.hpp"
#include "astg/sim.hpp"

namespace astg::train {

struct TrainConfig {
  double gamma = 0.9;
  int il_episodes = 3000;
  int rl_episodes = 7000;
  int il_epochs = 50;
  std::size_t batch_size = 100;
  double il_learning_rate = 1e-3;
  double rl_learning_rate = 1e-4;
  double momentum = 0.0;
  // Gradient steps per environment step during RL.
  int rl_updates_per_step = 1;
  // Episodes between target-network syncs.
  int target_sync_interval = 50;
  std::size_t replay_capacity = 100000;
  double epsilon_start = 0.5;
  double epsilon_end = 0.1;
  // Negative selects 40% of rl_episodes.
  int epsilon_decay_episodes = -1;
  // Extra clearance the ORCA demonstrator keeps around humans.
  double il_safety_margin = 0.15;
  // Share of demonstration samples whose robot velocity is redrawn from the
  // action speeds with a uniform heading. The robot is holonomic and unseen,
  // so its current velocity has no bearing on the return and the label holds.
  // Demonstrations alone only show velocities pointing at the goal.
  double il_velocity_resample = 0.5;
  std::size_t history_length = net::kDefaultHistoryLength;

  int resolved_decay_episodes() const;
  void validate() const;
};

/// gamma^(dt * v_pref).
double discount_factor(double gamma, double dt, double preferred_speed);

/// Linear decay from start to end over `decay_episodes`, then constant.
double epsilon_at(const TrainConfig& cfg, int episode);

/// y_t = sum_k gamma^(k dt v_pref) r_{t+k}, accumulated back to front.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma, double dt,
                                       double preferred_speed);

/// Immediate reward of taking `action` while humans keep their velocities.
double lookahead_reward(const WorldAgentState& robot, const Action& action,
                        std::span<const WorldAgentState> humans, const sim::EpisodeConfig& cfg);

/// Observation after one step of `action` with constant-velocity humans.
Observation propagate(const Observation& obs, const Action& action, double dt);

struct ActionScore {
  std::size_t index = 0;
  double score = 0.0;
};

/// Greedy one-step lookahead: argmax_a R(s,a) + gamma^(dt v_pref) V(s'),
/// ties to the lowest index.
ActionScore best_action(const Observation& obs, const net::AstgParams& params,
                        std::span<const Action> actions, double gamma,
                        const sim::EpisodeConfig& cfg);

/// Epsilon-greedy wrapper around best_action. Throws InvalidConfigError on an
/// empty action set.
Action select_action(const Observation& obs, const net::AstgParams& params,
                     std::span<const Action> actions, double epsilon, double gamma,
                     const sim::EpisodeConfig& cfg, Rng& rng);

class AstgPolicy final : public Policy {
 public:
  AstgPolicy(const net::AstgParams& params, double gamma, sim::EpisodeConfig cfg,
             double epsilon = 0.0);
  Action act(const Observation& obs, Rng& rng) override;
  std::string_view name() const override { return "astg"; }
  void set_epsilon(double e) { epsilon_ = e; }

 private:
  const net::AstgParams* params_;
  double gamma_;
  sim::EpisodeConfig cfg_;
  double epsilon_;
  std::vector<Action> actions_;
  double actions_speed_ = -1.0;
};

struct Transition {
  JointState state;
  net::HistoryWindow history;
  double reward = 0.0;
  JointState next_state;
  net::HistoryWindow next_history;
  bool terminal = false;
  double dt = 0.25;
  double preferred_speed = 1.0;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Oldest-first view index.
  const Transition& at(std::size_t i) const;
  /// Uniform with replacement.
  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // next slot to overwrite once full
};

/// SGD with optional momentum over a parameter set.
class Sgd {
 public:
  Sgd(const net::AstgParams& params, double learning_rate, double momentum);
  void step(net::AstgParams& params);
  void set_learning_rate(double lr) { learning_rate_ = lr; }

 private:
  double learning_rate_;
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

struct ValueSample {
  JointState state;
  net::HistoryWindow history;
  double target = 0.0;
};

struct RegressionItem {
  const JointState* state;
  const net::HistoryWindow* history;
  double target;
};

/// One optimizer step on the mean squared error of V over `batch`. Returns the
/// loss before the step.
double regression_step(net::AstgParams& params, std::span<const RegressionItem> batch,
                       Sgd& optimizer);

/// Value labels for one demonstration trace.
std::vector<ValueSample> label_trace(const EpisodeTrace& trace, double gamma, double dt);

struct TrainingEnv {
  sim::ScenarioSpec scenario;  // seed is replaced per episode
  sim::EpisodeConfig episode;
  std::uint64_t seed = 0;
};

struct CurveEntry {
  std::string phase;  // "il_demo", "il_epoch" or "rl"
  int episode = 0;
  double discounted_return = 0.0;
  sim::Cause outcome = sim::Cause::running;
  double loss = 0.0;  // mean over the updates attributed to this entry
  double epsilon = 0.0;
  double navigation_time = 0.0;
};

using CurveSink = std::function<void(const CurveEntry&)>;

/// Demonstrations from the ORCA-driven robot, then il_epochs of regression
/// onto the discounted returns.
void il_pretrain(const TrainingEnv& env, net::AstgParams& params, const TrainConfig& cfg,
                 const CurveSink& sink = {});

/// Epsilon-greedy TD(0) with replay and a periodically synced target network.
/// Throws DivergenceError when a loss becomes non-finite.
void rl_train(const TrainingEnv& env, net::AstgParams& params, const TrainConfig& cfg,
              const CurveSink& sink = {});

/// TD target r + gamma^(dt v_pref) V_target(s'), or r when terminal.
double td_target(const Transition& t, const net::AstgParams& target, double gamma);

}  // namespace astg::train
