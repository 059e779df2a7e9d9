#include <benchmark/benchmark.h>

#include "astg/orca.hpp"
#include "astg/rollout.hpp"
#include "astg/sim.hpp"
#include "astg/trainer.hpp"

namespace {

using namespace astg;

Observation sample_observation(int humans) {
  sim::ScenarioSpec spec;
  spec.n_dynamic = humans;
  spec.seed = 11;
  sim::World world = sim::generate_scenario(spec);
  net::HistoryWindow history(net::kDefaultHistoryLength);
  Observation obs = observe(world, history);
  sim::EpisodeConfig cfg;
  for (int i = 0; i < 7; ++i) {
    world = sim::step(world, Action{{0.0, 0.5}}, cfg).next;
    obs = observe(world, obs.history);
  }
  return obs;
}

void BM_ValueForward(benchmark::State& state) {
  const Observation obs = sample_observation(static_cast<int>(state.range(0)));
  const auto params = net::AstgParams::initialize({}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(net::value(obs.joint, obs.history, params));
}
BENCHMARK(BM_ValueForward)->Arg(2)->Arg(5)->Arg(10);

void BM_Lookahead(benchmark::State& state) {
  const Observation obs = sample_observation(static_cast<int>(state.range(0)));
  const auto params = net::AstgParams::initialize({}, 1);
  const auto actions = build_action_space(1.0);
  sim::EpisodeConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(train::best_action(obs, params, actions, 0.9, cfg));
}
BENCHMARK(BM_Lookahead)->Arg(2)->Arg(5);

void BM_RegressionStep(benchmark::State& state) {
  const Observation obs = sample_observation(static_cast<int>(state.range(0)));
  auto params = net::AstgParams::initialize({}, 1);
  train::Sgd sgd(params, 1e-4, 0.0);
  std::vector<train::RegressionItem> batch(100, {&obs.joint, &obs.history, 0.5});
  for (auto _ : state) benchmark::DoNotOptimize(train::regression_step(params, batch, sgd));
}
BENCHMARK(BM_RegressionStep)->Arg(2)->Arg(5);

void BM_OrcaStep(benchmark::State& state) {
  sim::ScenarioSpec spec;
  spec.n_dynamic = static_cast<int>(state.range(0));
  spec.seed = 3;
  const sim::World world = sim::generate_scenario(spec);
  sim::EpisodeConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(sim::step_humans(world.humans, cfg));
}
BENCHMARK(BM_OrcaStep)->Arg(5)->Arg(15);

}  // namespace
BENCHMARK_MAIN();
