// Copyright 2026 The ttarisk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "ttarisk/exit_analysis.hpp"
#include "ttarisk/sim_carfollow.hpp"

namespace {

using namespace ttarisk;

const TrafficEnv kTraffic = traffic_for_flow(1500.0, TrafficEnv{});

void BM_ExitSolve(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const ChainParams params{0.02, 0.34, d, d};
  const auto ext = build_extended_matrix(params, kTraffic, 1.24e-3);
  const auto mod = build_modified_matrix(params, free_state_probs(kTraffic));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_exit(ext, mod, 1.0 / 15.0));
  }
}
BENCHMARK(BM_ExitSolve)->Arg(4)->Arg(8)->Arg(16)->Arg(64);

// Reports walk steps per second through the items counter.
void BM_McOracle(benchmark::State& state) {
  const ChainParams params{0.02, 0.34, 8, 8};
  const auto mod = build_modified_matrix(params, free_state_probs(kTraffic));
  const double steps_per_walk = exit_time(mod)[0];
  const auto runs = static_cast<std::uint64_t>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc_exit_oracle(mod, 0, {runs, seed++, 1, 100'000'000}));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * runs * steps_per_walk));
}
BENCHMARK(BM_McOracle)->Arg(10'000)->Unit(benchmark::kMillisecond);

void BM_SimulateTrips(benchmark::State& state) {
  const StateSpace space({});
  TaskSpec task;
  task.flow_q = 1800.0;
  task.ttc_threshold_c = 1.4;
  task.trip_count = static_cast<std::uint64_t>(state.range(0));
  const ControllerSettings controller;
  for (auto _ : state) {
    task.seed += 1;
    benchmark::DoNotOptimize(run_task(task, space, controller, TrafficEnv{}, {}, {false, 1}));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * task.trip_count));
}
BENCHMARK(BM_SimulateTrips)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
