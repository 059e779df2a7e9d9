#include "astg/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "astg/error.hpp"
#include "json.hpp"

namespace astg::eval {

using nlohmann::json;

std::uint64_t case_seed(std::uint64_t base, std::size_t index) {
  return derive_seed(base, "eval-case", index);
}

std::vector<EpisodeRecord> run_eval(const sim::ScenarioSpec& family, const PolicyFactory& make_policy,
                                    const sim::EpisodeConfig& cfg, const EvalOptions& options) {
  if (options.cases == 0) throw InvalidConfigError("eval: cases must be >= 1");
  if (!make_policy) throw InvalidConfigError("eval: no policy factory");
  family.validate();
  cfg.validate();

  unsigned workers = options.workers == 0 ? std::thread::hardware_concurrency() : options.workers;
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(options.cases));

  std::vector<EpisodeRecord> records(options.cases);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    try {
      auto policy = make_policy();
      RolloutOptions rollout{options.history_length, false};
      for (std::size_t i = next++; i < options.cases; i = next++) {
        sim::ScenarioSpec spec = family;
        spec.seed = case_seed(options.seed, i);
        Rng rng(derive_seed(spec.seed, "policy"));
        records[i] = run_episode(spec, *policy, cfg, rng, rollout).record;
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = options.cases;
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

std::size_t discomfort_steps(const EpisodeRecord& rec, const sim::EpisodeConfig& cfg) {
  return static_cast<std::size_t>(std::count_if(rec.steps.begin(), rec.steps.end(), [&](const auto& s) {
    return s.d_min < cfg.discomfort_dist;
  }));
}

double weighted_nav_time(std::span<const EpisodeRecord> records, const sim::EpisodeConfig& cfg) {
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& rec : records) {
    if (rec.outcome == sim::Cause::reached_goal) {
      total += rec.navigation_time + static_cast<double>(discomfort_steps(rec, cfg)) * 0.5 * cfg.dt;
      ++counted;
    } else if (rec.outcome == sim::Cause::collision) {
      total += cfg.t_limit;
      ++counted;
    }
  }
  if (counted == 0) {
    throw MetricError("weighted navigation time is undefined: no success or collision cases");
  }
  return total / static_cast<double>(counted);
}

MetricsSummary summarize(std::span<const EpisodeRecord> records, const sim::EpisodeConfig& cfg) {
  if (records.empty()) throw UsageError("summarize: no records");
  MetricsSummary m;
  m.episodes = records.size();
  double succ_time = 0.0;
  for (const auto& rec : records) {
    switch (rec.outcome) {
      case sim::Cause::reached_goal:
        ++m.n_succ;
        succ_time += rec.navigation_time;
        break;
      case sim::Cause::collision:
        ++m.n_coll;
        break;
      case sim::Cause::timeout:
        ++m.n_timeout;
        break;
      case sim::Cause::running:
        throw UsageError("summarize: record of an unfinished episode");
    }
    m.n_disc += discomfort_steps(rec, cfg);
    m.total_steps += rec.steps.size();
  }
  const double n = static_cast<double>(m.episodes);
  m.success_rate = static_cast<double>(m.n_succ) / n;
  m.collision_rate = static_cast<double>(m.n_coll) / n;
  m.timeout_rate = static_cast<double>(m.n_timeout) / n;
  m.disc_freq = m.total_steps ? static_cast<double>(m.n_disc) / static_cast<double>(m.total_steps) : 0.0;
  if (m.n_succ > 0) m.t_succ_nav = succ_time / static_cast<double>(m.n_succ);
  if (m.n_succ + m.n_coll > 0) m.t_weighted_nav = weighted_nav_time(records, cfg);
  return m;
}

// ---------------------------------------------------------------- records

namespace {

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }
Vec2 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json agent_json(const WorldAgentState& a) {
  return {{"p", vec_json(a.position)},
          {"v", vec_json(a.velocity)},
          {"r", a.radius},
          {"g", vec_json(a.goal)},
          {"vp", a.preferred_speed}};
}

WorldAgentState agent_from(const json& j) {
  WorldAgentState a;
  a.position = vec_from(j.at("p"));
  a.velocity = vec_from(j.at("v"));
  a.radius = j.at("r").get<double>();
  a.goal = vec_from(j.at("g"));
  a.preferred_speed = j.at("vp").get<double>();
  return a;
}

json agents_json(std::span<const WorldAgentState> agents) {
  json out = json::array();
  for (const auto& a : agents) out.push_back(agent_json(a));
  return out;
}

std::vector<WorldAgentState> agents_from(const json& j) {
  std::vector<WorldAgentState> out;
  for (const auto& a : j) out.push_back(agent_from(a));
  return out;
}

json scenario_json(const sim::ScenarioSpec& s) {
  return {{"kind", sim::to_string(s.kind)},
          {"n_dynamic", s.n_dynamic},
          {"n_static", s.n_static},
          {"layout", sim::to_string(s.layout)},
          {"circle_radius", s.circle_radius},
          {"seed", s.seed},
          {"human_radius", s.human_radius},
          {"human_speed", s.human_speed},
          {"robot_radius", s.robot_radius},
          {"robot_speed", s.robot_speed},
          {"angular_jitter", s.angular_jitter},
          {"position_jitter", s.position_jitter}};
}

sim::ScenarioSpec scenario_from(const json& j) {
  sim::ScenarioSpec s;
  s.kind = sim::parse_scenario_kind(j.at("kind").get<std::string>());
  s.n_dynamic = j.at("n_dynamic").get<int>();
  s.n_static = j.at("n_static").get<int>();
  s.layout = sim::parse_group_layout(j.at("layout").get<std::string>());
  s.circle_radius = j.at("circle_radius").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.human_radius = j.at("human_radius").get<double>();
  s.human_speed = j.at("human_speed").get<double>();
  s.robot_radius = j.at("robot_radius").get<double>();
  s.robot_speed = j.at("robot_speed").get<double>();
  s.angular_jitter = j.at("angular_jitter").get<double>();
  s.position_jitter = j.at("position_jitter").get<double>();
  return s;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string record_to_json(const EpisodeRecord& rec) {
  json steps = json::array();
  for (const auto& s : rec.steps) {
    json d_min = std::isfinite(s.d_min) ? json(s.d_min) : json(nullptr);
    steps.push_back({{"t", s.time},
                     {"robot", agent_json(s.robot)},
                     {"humans", agents_json(s.humans)},
                     {"action", vec_json(s.action.velocity)},
                     {"reward", s.reward},
                     {"d_min", d_min}});
  }
  json j = {{"version", kRecordFormatVersion},
            {"seed", rec.seed},
            {"policy", rec.policy},
            {"scenario", scenario_json(rec.scenario)},
            {"initial_robot", agent_json(rec.initial_robot)},
            {"initial_humans", agents_json(rec.initial_humans)},
            {"outcome", sim::to_string(rec.outcome)},
            {"navigation_time", rec.navigation_time},
            {"steps", std::move(steps)}};
  return j.dump();
}

EpisodeRecord record_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    if (j.at("version").get<int>() != kRecordFormatVersion) {
      throw LoadError("episode record: unsupported version " + j.at("version").dump());
    }
    EpisodeRecord rec;
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.policy = j.at("policy").get<std::string>();
    rec.scenario = scenario_from(j.at("scenario"));
    rec.initial_robot = agent_from(j.at("initial_robot"));
    rec.initial_humans = agents_from(j.at("initial_humans"));
    rec.outcome = sim::parse_cause(j.at("outcome").get<std::string>());
    rec.navigation_time = j.at("navigation_time").get<double>();
    for (const auto& s : j.at("steps")) {
      StepRecord step;
      step.time = s.at("t").get<double>();
      step.robot = agent_from(s.at("robot"));
      step.humans = agents_from(s.at("humans"));
      step.action.velocity = vec_from(s.at("action"));
      step.reward = s.at("reward").get<double>();
      const auto& d = s.at("d_min");
      step.d_min = d.is_null() ? std::numeric_limits<double>::infinity() : d.get<double>();
      rec.steps.push_back(std::move(step));
    }
    return rec;
  } catch (const json::exception& e) {
    throw LoadError(std::string("episode record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw LoadError(std::string("episode record: ") + e.what());
  }
}

void write_records(std::ostream& os, std::span<const EpisodeRecord> records) {
  for (const auto& rec : records) os << record_to_json(rec) << '\n';
}

std::vector<EpisodeRecord> read_records(std::istream& is) {
  std::vector<EpisodeRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) out.push_back(record_from_json(line));
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const EpisodeRecord& rec) {
  os << "step,time,agent,x,y,vx,vy,radius\n";
  auto row = [&](std::size_t step, double time, std::size_t agent, const WorldAgentState& a) {
    os << step << ',' << fmt(time) << ',' << agent << ',' << fmt(a.position.x) << ','
       << fmt(a.position.y) << ',' << fmt(a.velocity.x) << ',' << fmt(a.velocity.y) << ','
       << fmt(a.radius) << '\n';
  };
  row(0, 0.0, 0, rec.initial_robot);
  for (std::size_t i = 0; i < rec.initial_humans.size(); ++i) row(0, 0.0, i + 1, rec.initial_humans[i]);
  for (std::size_t k = 0; k < rec.steps.size(); ++k) {
    const auto& s = rec.steps[k];
    row(k + 1, s.time, 0, s.robot);
    for (std::size_t i = 0; i < s.humans.size(); ++i) row(k + 1, s.time, i + 1, s.humans[i]);
  }
}

std::string metrics_report(const MetricsSummary& m) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("n/a"); };
  std::ostringstream os;
  os << "episodes        " << m.episodes << '\n'
     << "success_rate    " << fmt(m.success_rate) << '\n'
     << "collision_rate  " << fmt(m.collision_rate) << '\n'
     << "timeout_rate    " << fmt(m.timeout_rate) << '\n'
     << "disc_freq       " << fmt(m.disc_freq) << '\n'
     << "t_succ_nav      " << opt(m.t_succ_nav) << '\n'
     << "t_weighted_nav  " << opt(m.t_weighted_nav) << '\n'
     << "n_succ          " << m.n_succ << '\n'
     << "n_coll          " << m.n_coll << '\n'
     << "n_timeout       " << m.n_timeout << '\n'
     << "n_disc          " << m.n_disc << '\n'
     << "total_steps     " << m.total_steps << '\n';
  return os.str();
}

std::string metrics_json(const MetricsSummary& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = {{"episodes", m.episodes},
            {"success_rate", m.success_rate},
            {"collision_rate", m.collision_rate},
            {"timeout_rate", m.timeout_rate},
            {"disc_freq", m.disc_freq},
            {"t_succ_nav", opt(m.t_succ_nav)},
            {"t_weighted_nav", opt(m.t_weighted_nav)},
            {"n_succ", m.n_succ},
            {"n_coll", m.n_coll},
            {"n_timeout", m.n_timeout},
            {"n_disc", m.n_disc},
            {"total_steps", m.total_steps}};
  return j.dump(2) + "\n";
}

}  // namespace astg::eval
