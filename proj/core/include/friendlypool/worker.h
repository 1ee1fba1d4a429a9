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

#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>

#include "friendlypool/harness.h"
#include "friendlypool/rational.h"

namespace friendlypool {

struct WorkerOptions {
  Strategy strategy;
  std::size_t processes = 1;
  std::size_t cpus = 1;
  double rate = 100.0;
  std::chrono::milliseconds duration{5000};
  unsigned fib_n = 30;
  bool contention = false;
  Rational overcommit{1};
  std::chrono::milliseconds poll_interval{10};
  std::filesystem::path samples_csv;
  std::filesystem::path trace_csv;
};

/// Body of one experiment process.
///
/// Builds the pool, writes "READY <pid> <threads> <dynamic>" to `out`, waits
/// for "GO" on `in`, drives load for the configured duration, stops the pool
/// without draining, writes the sample and trace CSVs, then writes
/// "DONE <start_ns> <end_ns> <emitted> <completed> <lag_events>".
/// Returns a process exit code.
int run_worker(const WorkerOptions& options, std::istream& in, std::ostream& out);

}  // namespace friendlypool
