/*
 * Copyright 2026 The friendlypool Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <atomic>
#include <chrono>

#include "friendlypool/cpu_times.h"
#include "friendlypool/pool.h"
#include "friendlypool/scaling.h"
#include "friendlypool/workload.h"

namespace friendlypool {
namespace {

void BM_Fib(benchmark::State& state) {
  const auto n = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fib(n));
}
BENCHMARK(BM_Fib)->DenseRange(20, 30, 5)->Unit(benchmark::kMillisecond);

void BM_ComputeActiveThreads(benchmark::State& state) {
  const Rational o(5, 4);
  std::int64_t self = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_active_threads(o, std::chrono::nanoseconds(self),
                                                    std::chrono::nanoseconds(10'000'000), 64, 64));
    self = (self * 7919) % 10'000'000;
  }
}
BENCHMARK(BM_ComputeActiveThreads);

void BM_SampleCpuTimes(benchmark::State& state) {
  ProcCpuTimeSampler sampler;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample());
}
BENCHMARK(BM_SampleCpuTimes);

// Submit a batch of empty tasks and drain them.
void BM_PoolSubmitDrain(benchmark::State& state) {
  const auto batch = state.range(0);
  for (auto _ : state) {
    PoolConfig config;
    config.mode = StaticThreads{2};
    FriendlyPool pool(config);
    std::atomic<std::int64_t> done{0};
    for (std::int64_t i = 0; i < batch; ++i) pool.submit([&](std::size_t) { done++; });
    pool.shutdown(true);
    benchmark::DoNotOptimize(done.load());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_PoolSubmitDrain)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace friendlypool

BENCHMARK_MAIN();
