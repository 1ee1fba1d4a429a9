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

#include "friendlypool/pool.h"

#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "friendlypool/clock.h"
#include "friendlypool/cpu_detect.h"
#include "friendlypool/error.h"
#include "friendlypool/scaling.h"

namespace friendlypool {

void validate(const PoolConfig& config) {
  if (config.overcommit <= Rational(0)) {
    throw std::invalid_argument("overcommit factor must be > 0");
  }
  const auto tick = std::chrono::nanoseconds(1'000'000'000 / clock_ticks_per_second());
  if (config.poll_interval < tick) {
    throw std::invalid_argument("poll interval must be at least one clock tick (" +
                                std::to_string(tick.count()) + " ns)");
  }
  if (const auto* fixed = std::get_if<StaticThreads>(&config.mode); fixed && fixed->threads == 0) {
    throw std::invalid_argument("static pool needs at least one thread");
  }
}

void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace) {
  out << "timestamp_ns,active_count\n";
  for (const auto& p : trace) out << p.timestamp_ns << ',' << p.active_count << '\n';
}

FriendlyPool::FriendlyPool(PoolConfig config) : config_(std::move(config)) {
  validate(config_);

  std::size_t threads = 0;
  if (const auto* fixed = std::get_if<StaticThreads>(&config_.mode)) {
    threads = fixed->threads;
  } else {
    threads = config_.max_threads;
    if (threads == 0) threads = static_cast<std::size_t>(detect_cpu_budget().effective_cpus);
  }
  cpus_ = config_.cpus != 0 ? config_.cpus : threads;
  active_.store(threads, std::memory_order_release);
  park_cv_ = std::make_unique<std::condition_variable[]>(threads);
  record_trace(threads);

  if (collaborative()) {
    sampler_ = config_.sampler ? config_.sampler : std::make_shared<ProcCpuTimeSampler>();
  }

  try {
    workers_.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) {
      workers_.emplace_back([this, i] { worker_loop(i); });
    }
    if (collaborative() && config_.run_control_thread) {
      control_ = std::thread([this] { control_loop(); });
    }
  } catch (...) {
    stop_threads(false);
    throw;
  }
}

FriendlyPool::~FriendlyPool() {
  if (!shut_down_) stop_threads(false);
}

bool FriendlyPool::collaborative() const noexcept {
  return std::holds_alternative<Collaborative>(config_.mode);
}

void FriendlyPool::submit(Task task) {
  {
    std::lock_guard lk(mu_);
    if (stopping_) throw RejectedError("submit after shutdown");
    queue_.push_back(std::move(task));
    submitted_.fetch_add(1, std::memory_order_release);
  }
  work_cv_.notify_one();
}

void FriendlyPool::worker_loop(std::size_t index) {
  std::unique_lock lk(mu_);
  for (;;) {
    if (abandon_) return;
    if (index >= active_.load(std::memory_order_acquire)) {
      // A submit may have woken us instead of an active worker; pass it on.
      if (!queue_.empty()) work_cv_.notify_one();
      if (stopping_) return;
      park_cv_[index].wait(lk, [&] {
        return abandon_ || stopping_ || index < active_.load(std::memory_order_acquire);
      });
      continue;
    }
    if (queue_.empty()) {
      if (stopping_) return;
      work_cv_.wait(lk, [&] {
        return abandon_ || stopping_ || !queue_.empty() ||
               index >= active_.load(std::memory_order_acquire);
      });
      continue;
    }
    Task task = std::move(queue_.front());
    queue_.pop_front();
    lk.unlock();
    try {
      task(index);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "friendlypool: task on worker %zu threw: %s\n", index, e.what());
    }
    completed_.fetch_add(1, std::memory_order_release);
    lk.lock();
  }
}

void FriendlyPool::control_loop() {
  std::optional<CpuTimeSample> prev = control_tick(std::nullopt);
  auto next = std::chrono::steady_clock::now() + config_.poll_interval;
  std::unique_lock lk(control_mu_);
  while (!control_cv_.wait_until(lk, next, [&] { return control_stop_; })) {
    lk.unlock();
    prev = control_tick(prev);
    lk.lock();
    next += config_.poll_interval;
    if (const auto now = std::chrono::steady_clock::now(); next < now) next = now + config_.poll_interval;
  }
}

std::optional<CpuTimeSample> FriendlyPool::control_tick(const std::optional<CpuTimeSample>& prev) {
  if (!sampler_) return prev;
  CpuTimeSample now;
  try {
    now = sampler_->sample();
  } catch (const SampleError& e) {
    std::fprintf(stderr, "friendlypool: skipping control tick: %s\n", e.what());
    return prev;
  }
  if (prev) {
    const auto wanted = compute_active_threads(config_.overcommit, now.self_time - prev->self_time,
                                               now.all_time - prev->all_time, cpus_,
                                               workers_.size());
    set_active(wanted);
  }
  return now;
}

void FriendlyPool::set_active(std::size_t count) {
  std::size_t old = 0;
  {
    std::lock_guard lk(mu_);
    old = active_.load(std::memory_order_relaxed);
    active_.store(count, std::memory_order_release);
  }
  if (count > old) {
    for (std::size_t i = old; i < count; ++i) park_cv_[i].notify_one();
  } else if (count < old) {
    // Idle workers above the new count move from the queue wait to parking.
    work_cv_.notify_all();
  }
  if (count != old) rescale_events_.fetch_add(1, std::memory_order_relaxed);
  record_trace(count);
}

void FriendlyPool::record_trace(std::size_t count) {
  std::lock_guard lk(trace_mu_);
  trace_.push_back({monotonic_now_ns(), count});
}

void FriendlyPool::stop_threads(bool drain) {
  {
    std::lock_guard lk(control_mu_);
    control_stop_ = true;
  }
  control_cv_.notify_all();
  if (control_.joinable()) control_.join();

  {
    std::lock_guard lk(mu_);
    stopping_ = true;
    if (!drain) abandon_ = true;
  }
  work_cv_.notify_all();
  for (std::size_t i = 0; i < workers_.size(); ++i) park_cv_[i].notify_all();
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
}

PoolStats FriendlyPool::shutdown(bool drain) {
  if (shut_down_.exchange(true)) throw std::logic_error("FriendlyPool::shutdown called twice");
  stop_threads(drain);
  return stats();
}

PoolStats FriendlyPool::stats() const {
  PoolStats out;
  // completed first so the snapshot never shows completed > submitted.
  out.completed = completed_.load(std::memory_order_acquire);
  out.submitted = submitted_.load(std::memory_order_acquire);
  out.rescale_events = rescale_events_.load(std::memory_order_relaxed);
  std::lock_guard lk(trace_mu_);
  out.active_count_trace = trace_;
  return out;
}

}  // namespace friendlypool
