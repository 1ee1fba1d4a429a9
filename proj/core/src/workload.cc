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

#include "friendlypool/workload.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "friendlypool/clock.h"

namespace friendlypool {
namespace {

[[gnu::noinline]] std::uint64_t fib_recursive(unsigned n) {
  if (n < 2) return n;
  return fib_recursive(n - 1) + fib_recursive(n - 2);
}

std::uint64_t fib_locked_at(unsigned n, std::mutex& lock, unsigned lock_at) {
  if (n == lock_at) {
    std::lock_guard guard(lock);
    return fib_recursive(n);
  }
  if (n < lock_at) return fib_recursive(n);
  return fib_locked_at(n - 1, lock, lock_at) + fib_locked_at(n - 2, lock, lock_at);
}

void check_n(unsigned n) {
  if (n > kMaxFibN) {
    throw std::invalid_argument("fib(" + std::to_string(n) + ") exceeds the limit of " +
                                std::to_string(kMaxFibN));
  }
}

}  // namespace

std::uint64_t fib(unsigned n) {
  check_n(n);
  return fib_recursive(n);
}

std::uint64_t fib_contended(unsigned n, std::mutex& lock, unsigned lock_at) {
  check_n(n);
  return fib_locked_at(n, lock, lock_at);
}

std::mutex& global_fib_lock() {
  static std::mutex lock;
  return lock;
}

LatencySample process_item(WorkItem& item, bool contention) {
  item.fib_start_ns = monotonic_now_ns();
  item.result = contention
                    ? fib_contended(item.fib_n, global_fib_lock(), contended_lock_depth(item.fib_n))
                    : fib(item.fib_n);
  item.end_ns = monotonic_now_ns();
  return latency_of(item);
}

void validate(const DriverConfig& config) {
  if (!(config.target_rate > 0.0) || !std::isfinite(config.target_rate)) {
    throw std::invalid_argument("target rate must be > 0");
  }
  if (config.duration <= std::chrono::nanoseconds::zero()) {
    throw std::invalid_argument("duration must be > 0");
  }
  check_n(config.fib_n);
}

namespace {

std::int64_t emission_offset_ns(std::uint64_t k, double rate) {
  return static_cast<std::int64_t>(std::llround(static_cast<double>(k) * 1e9 / rate));
}

}  // namespace

std::uint64_t scheduled_item_count(double rate, std::chrono::nanoseconds duration) {
  const double approx = std::floor(static_cast<double>(duration.count()) * rate / 1e9);
  auto k = static_cast<std::uint64_t>(std::max(0.0, approx - 2.0));
  while (emission_offset_ns(k, rate) < duration.count()) ++k;
  return k;
}

DriverReport open_loop_driver(const DriverConfig& config,
                              const std::function<void(WorkItem)>& sink) {
  validate(config);
  const auto interval_ns = static_cast<std::int64_t>(1e9 / config.target_rate);
  DriverReport report;
  report.start_ns = monotonic_now_ns();
  const auto start_tp = std::chrono::steady_clock::now();
  const auto start_ns = report.start_ns;
  bool behind = false;

  for (std::uint64_t k = 0;; ++k) {
    const std::int64_t offset = emission_offset_ns(k, config.target_rate);
    if (offset >= config.duration.count()) break;
    const std::int64_t due = start_ns + offset;
    const std::int64_t now = monotonic_now_ns();
    if (now < due) {
      std::this_thread::sleep_until(start_tp + std::chrono::nanoseconds(offset));
      behind = false;
    } else if (now - due > interval_ns) {
      if (!behind) ++report.lag_events;
      behind = true;
    } else {
      behind = false;
    }
    WorkItem item;
    item.id = k;
    item.fib_n = config.fib_n;
    item.queue_start_ns = monotonic_now_ns();
    sink(std::move(item));
    ++report.emitted;
  }
  report.end_ns = monotonic_now_ns();
  return report;
}

std::chrono::nanoseconds measure_fib(unsigned n, int repetitions) {
  std::vector<std::int64_t> times;
  volatile std::uint64_t sink = 0;
  for (int i = 0; i < std::max(repetitions, 1); ++i) {
    const auto t0 = monotonic_now_ns();
    sink = fib(n);
    times.push_back(monotonic_now_ns() - t0);
  }
  (void)sink;
  std::sort(times.begin(), times.end());
  return std::chrono::nanoseconds(times[times.size() / 2]);
}

Calibration calibrate(std::chrono::nanoseconds low, std::chrono::nanoseconds high) {
  const double target = std::sqrt(static_cast<double>(low.count()) * static_cast<double>(high.count()));
  Calibration best;
  Calibration last;
  double best_distance = INFINITY;
  measure_fib(20, 3);  // warm up
  for (unsigned n = 20; n <= kMaxFibN; ++n) {
    const auto t = measure_fib(n, n > 32 ? 1 : 3);
    last = {n, t, 1e9 / static_cast<double>(std::max<std::int64_t>(t.count(), 1))};
    if (t >= low && t <= high) {
      const double distance = std::abs(std::log(static_cast<double>(t.count()) / target));
      if (distance < best_distance) {
        best_distance = distance;
        best = {n, t, 1e9 / static_cast<double>(t.count())};
      }
    }
    if (t > high) break;
  }
  return std::isfinite(best_distance) ? best : last;
}

void write_samples_csv(std::ostream& out, std::span<const WorkItem> items) {
  out << "id,queue_start_ns,fib_start_ns,end_ns\n";
  for (const auto& it : items) {
    out << it.id << ',' << it.queue_start_ns << ',' << it.fib_start_ns << ',' << it.end_ns << '\n';
  }
}

}  // namespace friendlypool
