#include <benchmark/benchmark.h>

#include "routelearn/planner.hpp"
#include "routelearn/poa.hpp"
#include "routelearn/simulate.hpp"

using namespace routelearn;

namespace {

Scenario bench_scenario() {
  Scenario s;
  s.ell0 = 25.0;
  s.hazard = {1.3, 0.3};
  s.rho = 0.98;
  s.err = {2.0};
  s.obs = {ObsVariant::kMajorityVote, 0.8, 0.6};
  s.arrivals = {10, 10, 10.0, ArrivalDist::kUniform, 0.0};
  PathSpec p;
  p.name = "stochastic";
  p.chain = {0.1, 0.3};
  p.initial_belief = 0.5;
  p.initial_exp_latency = 25.0;
  s.paths = {p};
  s.prior_xbar.support = {0.1, 0.6};
  s.prior_xbar.weights = {0.5, 0.5};
  return s;
}

void bm_myopic_allocation(benchmark::State& state) {
  const std::vector<double> intercepts{25.0, 18.0, 31.0, 22.0, 27.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(myopic_allocation(intercepts, 121.0));
  }
}
BENCHMARK(bm_myopic_allocation);

void bm_value_iteration_sweeps(benchmark::State& state) {
  const Scenario s = bench_scenario();
  const int points = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        value_iteration(s, GridSpec{points, points, 0.0}, 1e-2, 50));
  }
}
BENCHMARK(bm_value_iteration_sweeps)->Arg(41)->Arg(81);

void bm_run_episode(benchmark::State& state) {
  const Scenario s = bench_scenario();
  const auto policy = make_policy("myopic", s);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_episode(s, *policy, 600, seed++));
  }
}
BENCHMARK(bm_run_episode);

void bm_rollout_episode_m4(benchmark::State& state) {
  const Scenario s = beijing_preset();
  PolicyOptions options;
  options.rollout.depth = 2;
  const auto policy = make_policy("optimal", s, options);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_episode(s, *policy, 50, seed++));
  }
}
BENCHMARK(bm_rollout_episode_m4);

}  // namespace

BENCHMARK_MAIN();
