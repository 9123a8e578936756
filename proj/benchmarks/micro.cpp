#include <benchmark/benchmark.h>

#include "etfrp/actionspace.hpp"
#include "etfrp/charging.hpp"
#include "etfrp/environment.hpp"
#include "etfrp/planners.hpp"

using namespace etfrp;

namespace {

NetworkInstance fleet(int trucks, int stops, bool deterministic = false) {
  GeneratorParams p;
  p.n_trucks = trucks;
  p.stops_per_truck = stops;
  p.config.stochastic.deterministic = deterministic;
  return generate_instance(p, 7);
}

}  // namespace

static void BM_CccvPower(benchmark::State& state) {
  double soc = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cccv_power(soc, 50.0, 5.0));
    soc += 0.001;
    if (soc > 1.0) soc = 0.0;
  }
}
BENCHMARK(BM_CccvPower);

static void BM_IntegrateCharge(benchmark::State& state) {
  const double hours = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrate_charge(100.0, 400.0, hours, 0.85, 50.0, 5.0, 0.01));
}
BENCHMARK(BM_IntegrateCharge)->Arg(1)->Arg(6)->Arg(12);

static void BM_BuildActionSet(benchmark::State& state) {
  const auto inst = fleet(5, 3);
  const auto& t = inst.trucks.front();
  TruckView view{&t, t.start_node, t.initial_battery, t.deliveries, 0.0, true};
  for (auto _ : state) benchmark::DoNotOptimize(build_action_set(inst, view));
}
BENCHMARK(BM_BuildActionSet);

static void BM_EpisodeHeuristic(benchmark::State& state) {
  const auto inst = fleet(static_cast<int>(state.range(0)), 3);
  HeuristicPolicy policy;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_episode(inst, policy, seed++).metrics.reward_total);
}
BENCHMARK(BM_EpisodeHeuristic)->Arg(1)->Arg(5)->Arg(10)->Unit(benchmark::kMicrosecond);

static void BM_OptimalSearch(benchmark::State& state) {
  const auto inst = fleet(1, static_cast<int>(state.range(0)), true);
  for (auto _ : state) benchmark::DoNotOptimize(optimal_search(inst, inst.trucks.front()).nominal_cost);
}
BENCHMARK(BM_OptimalSearch)->Arg(2)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
