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
#include <filesystem>
#include <stdexcept>
#include <string_view>

namespace friendlypool {

/// Paired cumulative CPU-time readings.
///
/// self_time covers every thread of this process (user + system). all_time is
/// the non-idle time of the whole machine summed over all CPUs. Both use the
/// same unit so their deltas can be divided directly.
struct CpuTimeSample {
  std::chrono::nanoseconds self_time{0};
  std::chrono::nanoseconds all_time{0};
  std::chrono::steady_clock::time_point taken_at{};
};

class SampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Source of CpuTimeSamples. The one platform-specific seam of the pool;
/// tests substitute a scripted implementation.
class CpuTimeSampler {
 public:
  virtual ~CpuTimeSampler() = default;
  /// Throws SampleError when the counters cannot be read.
  virtual CpuTimeSample sample() = 0;
};

/// Reads /proc/self/stat and /proc/stat.
class ProcCpuTimeSampler final : public CpuTimeSampler {
 public:
  ProcCpuTimeSampler();
  ProcCpuTimeSampler(std::filesystem::path self_stat, std::filesystem::path system_stat,
                     long ticks_per_second);

  CpuTimeSample sample() override;

  long ticks_per_second() const noexcept { return ticks_per_second_; }

 private:
  std::filesystem::path self_stat_;
  std::filesystem::path system_stat_;
  long ticks_per_second_;
};

/// utime + stime, in clock ticks, from a /proc/<pid>/stat line.
std::uint64_t parse_process_stat_ticks(std::string_view text);

/// user + nice + system + irq + softirq + steal from the aggregate "cpu" line
/// of /proc/stat, in clock ticks. guest time is already folded into user.
std::uint64_t parse_system_stat_busy_ticks(std::string_view text);

/// Kernel accounting clock rate (USER_HZ).
long clock_ticks_per_second();

CpuTimeSample sample_cpu_times();

}  // namespace friendlypool
