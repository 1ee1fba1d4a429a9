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
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <span>

namespace friendlypool {

inline constexpr unsigned kMaxFibN = 40;
inline constexpr unsigned kDefaultLockDepth = 30;

/// Naive exponential-time recursion, F(0)=0, F(1)=1. The recursion is the
/// workload. Throws std::invalid_argument for n > kMaxFibN.
std::uint64_t fib(unsigned n);

/// fib() that holds `lock` for the whole of every recursive call whose
/// argument equals `lock_at`. Frames above `lock_at` and below it never touch
/// the lock.
std::uint64_t fib_contended(unsigned n, std::mutex& lock, unsigned lock_at = kDefaultLockDepth);

/// Process-wide lock used by contended work items.
std::mutex& global_fib_lock();

/// Lock depth used for an item of size fib_n: 30, or the item itself when it
/// is smaller, so scaled-down items stay fully serialised.
constexpr unsigned contended_lock_depth(unsigned fib_n) {
  return fib_n < kDefaultLockDepth ? fib_n : kDefaultLockDepth;
}

struct WorkItem {
  std::uint64_t id = 0;
  unsigned fib_n = 30;
  std::int64_t queue_start_ns = 0;
  std::int64_t fib_start_ns = 0;
  std::int64_t end_ns = 0;
  std::uint64_t result = 0;
};

struct LatencySample {
  std::int64_t queue_latency_ns = 0;
  std::int64_t fib_latency_ns = 0;
};

inline LatencySample latency_of(const WorkItem& item) {
  return {item.fib_start_ns - item.queue_start_ns, item.end_ns - item.fib_start_ns};
}

/// Runs on a worker: stamps fib_start, computes, stamps end.
LatencySample process_item(WorkItem& item, bool contention);

struct DriverConfig {
  double target_rate = 100.0;  // items per second
  std::chrono::nanoseconds duration = std::chrono::seconds(5);
  unsigned fib_n = 30;
  bool contention = false;
};

void validate(const DriverConfig& config);

struct DriverReport {
  std::uint64_t emitted = 0;
  /// Times the driver found itself more than one interval behind schedule.
  std::uint64_t lag_events = 0;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
};

/// Number of emission instants k/rate that fall inside [0, duration).
std::uint64_t scheduled_item_count(double rate, std::chrono::nanoseconds duration);

/// Open-loop generator: item k is emitted at start + k/rate regardless of
/// how far behind the consumer is. Each item's queue_start is stamped just
/// before `sink` is called. If the driver itself falls more than one
/// interval behind, the backlog is emitted immediately.
DriverReport open_loop_driver(const DriverConfig& config,
                              const std::function<void(WorkItem)>& sink);

/// Median single-thread wall time of fib(n) over `repetitions` runs.
std::chrono::nanoseconds measure_fib(unsigned n, int repetitions = 5);

struct Calibration {
  unsigned fib_n = 30;
  std::chrono::nanoseconds item_time{0};
  double capacity_per_thread = 0.0;  // items per second
};

/// Picks the fib_n whose single-thread time lies in [low, high], closest to
/// their geometric mean.
Calibration calibrate(std::chrono::nanoseconds low = std::chrono::milliseconds(5),
                      std::chrono::nanoseconds high = std::chrono::milliseconds(20));

/// "id,queue_start_ns,fib_start_ns,end_ns" plus one row per item.
void write_samples_csv(std::ostream& out, std::span<const WorkItem> items);

}  // namespace friendlypool
