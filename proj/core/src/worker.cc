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

#include "friendlypool/worker.h"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "friendlypool/pool.h"
#include "friendlypool/workload.h"

namespace friendlypool {

int run_worker(const WorkerOptions& options, std::istream& in, std::ostream& out) {
  const ThreadCount count = strategy_thread_count(options.strategy, options.cpus, options.processes);

  PoolConfig pool_config;
  pool_config.poll_interval = options.poll_interval;
  pool_config.overcommit = options.overcommit;
  if (count.dynamic) {
    pool_config.mode = Collaborative{};
    pool_config.max_threads = options.cpus;
    pool_config.cpus = options.cpus;
  } else {
    pool_config.mode = StaticThreads{count.threads};
  }

  DriverConfig driver_config;
  driver_config.target_rate = options.rate;
  driver_config.duration = options.duration;
  driver_config.fib_n = options.fib_n;
  driver_config.contention = options.contention;
  validate(driver_config);

  FriendlyPool pool(pool_config);
  std::vector<std::vector<WorkItem>> per_worker(pool.max_threads());

  out << "READY " << ::getpid() << ' ' << pool.max_threads() << ' ' << (count.dynamic ? 1 : 0)
      << std::endl;

  std::string line;
  if (!std::getline(in, line) || line != "GO") {
    std::cerr << "worker: expected GO, got '" << line << "'\n";
    pool.shutdown(false);
    return 2;
  }

  const bool contention = options.contention;
  const DriverReport report = open_loop_driver(driver_config, [&](WorkItem item) {
    pool.submit([&per_worker, contention, item](std::size_t worker) mutable {
      process_item(item, contention);
      per_worker[worker].push_back(item);
    });
  });
  const PoolStats stats = pool.shutdown(false);

  std::vector<WorkItem> items;
  items.reserve(stats.completed);
  for (auto& v : per_worker) items.insert(items.end(), v.begin(), v.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  {
    std::ofstream samples(options.samples_csv);
    write_samples_csv(samples, items);
    if (!samples) {
      std::cerr << "worker: cannot write " << options.samples_csv << '\n';
      return 3;
    }
  }
  {
    std::ofstream trace(options.trace_csv);
    write_trace_csv(trace, stats.active_count_trace);
    if (!trace) {
      std::cerr << "worker: cannot write " << options.trace_csv << '\n';
      return 3;
    }
  }

  out << "DONE " << report.start_ns << ' ' << report.end_ns << ' ' << report.emitted << ' '
      << items.size() << ' ' << report.lag_events << std::endl;
  return 0;
}

}  // namespace friendlypool
