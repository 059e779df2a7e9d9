#include "astg/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "astg/error.hpp"

namespace astg {

sim::ScenarioSpec RunConfig::default_scenario() {
  sim::ScenarioSpec s;
  s.kind = sim::ScenarioKind::scattered_static;
  s.n_dynamic = 5;
  s.n_static = 2;
  return s;
}

void RunConfig::validate() const {
  if (policy != "astg" && policy != "orca") {
    throw InvalidConfigError("policy must be astg or orca, got '" + policy + "'");
  }
  if (cases == 0) throw InvalidConfigError("cases must be >= 1");
  if (checkpoint_interval < 0) throw InvalidConfigError("checkpoint_interval must be >= 0");
  if (out_dir.empty()) throw InvalidConfigError("out must not be empty");
  scenario.validate();
  episode.validate();
  network.validate();
  train.validate();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw InvalidConfigError("config key '" + std::string(key) + "': cannot parse '" +
                             std::string(text) + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Access>
Field number(const char* key, Access access) {
  return {key,
          [access](RunConfig& c, std::string_view k, std::string_view v) {
            access(c) = parse_number<T>(k, v);
          },
          [access](const RunConfig& c) {
            const T v = access(const_cast<RunConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) {
              return fmt(v);
            } else {
              return std::to_string(v);
            }
          }};
}

#define ASTG_FIELD(T, key, member) number<T>(key, [](RunConfig& c) -> T& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(ASTG_FIELD(std::uint64_t, "seed", seed));
    f.push_back({"out", [](RunConfig& c, auto, std::string_view v) { c.out_dir = std::string(v); },
                 [](const RunConfig& c) { return c.out_dir; }});
    f.push_back({"checkpoint",
                 [](RunConfig& c, auto, std::string_view v) { c.checkpoint = std::string(v); },
                 [](const RunConfig& c) { return c.checkpoint; }});
    f.push_back({"policy", [](RunConfig& c, auto, std::string_view v) { c.policy = std::string(v); },
                 [](const RunConfig& c) { return c.policy; }});
    f.push_back(ASTG_FIELD(std::size_t, "cases", cases));
    f.push_back(ASTG_FIELD(unsigned, "workers", workers));
    f.push_back(ASTG_FIELD(int, "checkpoint_interval", checkpoint_interval));

    f.push_back({"scenario.kind",
                 [](RunConfig& c, auto, std::string_view v) { c.scenario.kind = sim::parse_scenario_kind(v); },
                 [](const RunConfig& c) { return std::string(sim::to_string(c.scenario.kind)); }});
    f.push_back(ASTG_FIELD(int, "scenario.n_dynamic", scenario.n_dynamic));
    f.push_back(ASTG_FIELD(int, "scenario.n_static", scenario.n_static));
    f.push_back({"scenario.layout",
                 [](RunConfig& c, auto, std::string_view v) { c.scenario.layout = sim::parse_group_layout(v); },
                 [](const RunConfig& c) { return std::string(sim::to_string(c.scenario.layout)); }});
    f.push_back(ASTG_FIELD(double, "scenario.circle_radius", scenario.circle_radius));
    f.push_back(ASTG_FIELD(double, "scenario.human_radius", scenario.human_radius));
    f.push_back(ASTG_FIELD(double, "scenario.human_speed", scenario.human_speed));
    f.push_back(ASTG_FIELD(double, "scenario.robot_radius", scenario.robot_radius));
    f.push_back(ASTG_FIELD(double, "scenario.robot_speed", scenario.robot_speed));
    f.push_back(ASTG_FIELD(double, "scenario.angular_jitter", scenario.angular_jitter));
    f.push_back(ASTG_FIELD(double, "scenario.position_jitter", scenario.position_jitter));

    f.push_back(ASTG_FIELD(double, "episode.dt", episode.dt));
    f.push_back(ASTG_FIELD(double, "episode.t_limit", episode.t_limit));
    f.push_back(ASTG_FIELD(double, "episode.discomfort_dist", episode.discomfort_dist));
    f.push_back(ASTG_FIELD(double, "orca.neighbor_dist", episode.human_orca.neighbor_dist));
    f.push_back(ASTG_FIELD(double, "orca.time_horizon", episode.human_orca.time_horizon));
    f.push_back(ASTG_FIELD(double, "orca.time_horizon_obst", episode.human_orca.time_horizon_obst));
    f.push_back(ASTG_FIELD(std::size_t, "orca.max_neighbors", episode.human_orca.max_neighbors));
    f.push_back(ASTG_FIELD(double, "orca.safety_margin", episode.human_orca.safety_margin));

    f.push_back({"network.ablation",
                 [](RunConfig& c, auto, std::string_view v) { c.network.ablation = net::parse_ablation(v); },
                 [](const RunConfig& c) { return std::string(net::to_string(c.network.ablation)); }});
    f.push_back(ASTG_FIELD(std::size_t, "network.spatial_hidden", network.spatial_hidden));
    f.push_back(ASTG_FIELD(std::size_t, "network.spatial_embed", network.spatial_embed));
    f.push_back(ASTG_FIELD(std::size_t, "network.temporal_embed", network.temporal_embed));
    f.push_back(ASTG_FIELD(std::size_t, "network.rnn_hidden", network.rnn_hidden));
    f.push_back(ASTG_FIELD(std::size_t, "network.attention_hidden", network.attention_hidden));
    f.push_back(ASTG_FIELD(std::size_t, "network.value_hidden1", network.value_hidden1));
    f.push_back(ASTG_FIELD(std::size_t, "network.value_hidden2", network.value_hidden2));
    f.push_back(ASTG_FIELD(double, "network.leaky_slope", network.leaky_slope));

    f.push_back(ASTG_FIELD(double, "train.gamma", train.gamma));
    f.push_back(ASTG_FIELD(int, "train.il_episodes", train.il_episodes));
    f.push_back(ASTG_FIELD(int, "train.rl_episodes", train.rl_episodes));
    f.push_back(ASTG_FIELD(int, "train.il_epochs", train.il_epochs));
    f.push_back(ASTG_FIELD(std::size_t, "train.batch_size", train.batch_size));
    f.push_back(ASTG_FIELD(double, "train.il_learning_rate", train.il_learning_rate));
    f.push_back(ASTG_FIELD(double, "train.rl_learning_rate", train.rl_learning_rate));
    f.push_back(ASTG_FIELD(double, "train.momentum", train.momentum));
    f.push_back(ASTG_FIELD(int, "train.rl_updates_per_step", train.rl_updates_per_step));
    f.push_back(ASTG_FIELD(int, "train.target_sync_interval", train.target_sync_interval));
    f.push_back(ASTG_FIELD(std::size_t, "train.replay_capacity", train.replay_capacity));
    f.push_back(ASTG_FIELD(double, "train.epsilon_start", train.epsilon_start));
    f.push_back(ASTG_FIELD(double, "train.epsilon_end", train.epsilon_end));
    f.push_back(ASTG_FIELD(int, "train.epsilon_decay_episodes", train.epsilon_decay_episodes));
    f.push_back(ASTG_FIELD(double, "train.il_safety_margin", train.il_safety_margin));
    f.push_back(ASTG_FIELD(double, "train.il_velocity_resample", train.il_velocity_resample));
    f.push_back(ASTG_FIELD(std::size_t, "train.history_length", train.history_length));
    return f;
  }();
  return table;
}

#undef ASTG_FIELD

}  // namespace

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      try {
        f.set(cfg, key, value);
      } catch (const InvalidConfigError&) {
        throw;
      } catch (const std::invalid_argument& e) {
        throw InvalidConfigError("config key '" + std::string(key) + "': " + e.what());
      }
      return;
    }
  }
  throw InvalidConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfigError(std::string(origin) + ":" + std::to_string(number) +
                               ": expected 'key = value'");
    }
    try {
      set_config_value(cfg, trim(std::string_view(body).substr(0, eq)),
                       trim(std::string_view(body).substr(eq + 1)));
    } catch (const InvalidConfigError& e) {
      throw InvalidConfigError(std::string(origin) + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  apply_config_text(cfg, text.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : fields()) os << f.key << " = " << f.get(cfg) << '\n';
  return os.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace astg
