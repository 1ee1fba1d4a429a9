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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <variant>
#include <vector>

#include "friendlypool/cpu_times.h"
#include "friendlypool/rational.h"

namespace friendlypool {

/// Exactly `threads` workers, all permanently active.
struct StaticThreads {
  std::size_t threads = 1;
};

/// Active worker count follows the process's share of machine CPU time.
struct Collaborative {};

using PoolMode = std::variant<StaticThreads, Collaborative>;

struct PoolConfig {
  /// Worker threads created at startup in collaborative mode.
  /// 0 means detect_cpu_budget().effective_cpus. Ignored for StaticThreads.
  std::size_t max_threads = 0;
  /// CPU count used by the scaling formula. 0 means max_threads.
  std::size_t cpus = 0;
  Rational overcommit{1};
  std::chrono::nanoseconds poll_interval = std::chrono::milliseconds(10);
  PoolMode mode = Collaborative{};
  /// Null selects ProcCpuTimeSampler.
  std::shared_ptr<CpuTimeSampler> sampler;
  /// When false no control thread is started and the owner drives
  /// control_tick() by hand.
  bool run_control_thread = true;
};

/// Throws std::invalid_argument if `config` breaks an invariant.
void validate(const PoolConfig& config);

struct TracePoint {
  std::int64_t timestamp_ns = 0;
  std::size_t active_count = 0;
};

struct PoolStats {
  std::uint64_t submitted = 0;
  std::uint64_t completed = 0;
  std::uint64_t rescale_events = 0;
  std::vector<TracePoint> active_count_trace;
};

/// Writes "timestamp_ns,active_count" rows with a header line.
void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace);

/// FIFO work-queue pool whose number of *active* workers is rescaled by a
/// control thread. Workers are created once and parked or unparked; no
/// thread is created or destroyed between construction and shutdown.
///
/// Worker i only dequeues while i < active_count(). A worker that becomes
/// inactive finishes its current task, then parks. Higher indices park
/// first, so worker 0 is always active.
class FriendlyPool {
 public:
  /// Receives the index of the worker running it.
  using Task = std::function<void(std::size_t worker)>;

  explicit FriendlyPool(PoolConfig config);
  ~FriendlyPool();

  FriendlyPool(const FriendlyPool&) = delete;
  FriendlyPool& operator=(const FriendlyPool&) = delete;

  /// Safe from any thread. Throws RejectedError after shutdown().
  void submit(Task task);

  /// Stops the control thread and joins every worker. With `drain`, queued
  /// tasks run first; without, only tasks already started are finished.
  /// A second call throws std::logic_error.
  PoolStats shutdown(bool drain);

  /// One control step: samples CPU times, rescales from the deltas against
  /// `prev`, and returns the sample to pass next time. Without `prev`, or if
  /// sampling fails, the active count is left unchanged; on failure `prev`
  /// is returned.
  std::optional<CpuTimeSample> control_tick(const std::optional<CpuTimeSample>& prev);

  std::size_t active_count() const noexcept { return active_.load(std::memory_order_acquire); }
  std::size_t max_threads() const noexcept { return workers_.size(); }
  std::size_t cpus() const noexcept { return cpus_; }
  bool collaborative() const noexcept;

  PoolStats stats() const;

 private:
  void worker_loop(std::size_t index);
  void control_loop();
  void set_active(std::size_t count);
  void record_trace(std::size_t count);
  void stop_threads(bool drain);

  PoolConfig config_;
  std::size_t cpus_ = 1;
  std::shared_ptr<CpuTimeSampler> sampler_;

  mutable std::mutex mu_;
  std::condition_variable work_cv_;
  std::unique_ptr<std::condition_variable[]> park_cv_;
  std::deque<Task> queue_;
  bool stopping_ = false;   // no new submissions; exit once queue is empty
  bool abandon_ = false;    // exit without taking further tasks

  std::atomic<bool> shut_down_{false};
  std::atomic<std::size_t> active_{1};
  std::atomic<std::uint64_t> submitted_{0};
  std::atomic<std::uint64_t> completed_{0};
  std::atomic<std::uint64_t> rescale_events_{0};

  mutable std::mutex trace_mu_;
  std::vector<TracePoint> trace_;

  std::mutex control_mu_;
  std::condition_variable control_cv_;
  bool control_stop_ = false;

  std::vector<std::thread> workers_;
  std::thread control_;
};

}  // namespace friendlypool
