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

#include <sched.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "friendlypool/rational.h"

namespace friendlypool {

enum class QuotaSource { affinity, cgroup_v1, cgroup_v2, env_override, unlimited };

std::string_view to_string(QuotaSource source);

/// CPU time a process may consume per scheduler period, in cores.
struct QuotaCores {
  Rational value;
  QuotaSource source = QuotaSource::unlimited;

  friend bool operator==(const QuotaCores&, const QuotaCores&) = default;
};

/// The number of CPUs a process should size its worker pools to.
struct CpuBudget {
  int effective_cpus = 1;
  int affinity_cpus = 1;
  std::optional<QuotaCores> quota;
  std::vector<std::string> warnings;
};

/// Number of CPUs set in `mask`.
int cpu_mask_count(const cpu_set_t& mask);

/// CPUs in the calling process's affinity mask. Falls back to the online CPU
/// count, then to 1; each fallback appends to `warnings` when non-null.
int affinity_cpu_count(std::vector<std::string>* warnings = nullptr);

/// Parses a cgroup v2 `cpu.max` file ("QUOTA PERIOD" or "max PERIOD").
/// Returns nullopt when unlimited. Throws ParseError on malformed input.
std::optional<QuotaCores> parse_cgroup_v2_cpu_max(std::string_view text);

/// Interprets cgroup v1 `cpu.cfs_quota_us` / `cpu.cfs_period_us` values.
/// quota_us == -1 means unlimited. Throws ParseError on out-of-range input.
std::optional<QuotaCores> parse_cgroup_v1_quota(std::int64_t quota_us, std::int64_t period_us);

/// Same as above, from the raw file contents.
std::optional<QuotaCores> parse_cgroup_v1_files(std::string_view quota_text,
                                                std::string_view period_text);

/// Cgroup paths of the process, parsed from a `/proc/<pid>/cgroup` file.
struct CgroupMembership {
  std::optional<std::string> unified_path;   // v2 "0::<path>"
  std::optional<std::string> cpu_path;       // v1 hierarchy holding the cpu controller
  std::string cpu_controllers;               // e.g. "cpu,cpuacct"
};

CgroupMembership parse_cgroup_membership(std::string_view text);

/// Parses a positive integer CPU override (the FRIENDLY_CPUS value).
/// Returns nullopt for null, empty or invalid text.
std::optional<int> parse_cpu_override(const char* text);

inline constexpr const char* kCpuOverrideEnv = "FRIENDLY_CPUS";

struct DetectOptions {
  std::optional<int> env_override;
  std::filesystem::path cgroup_root = "/sys/fs/cgroup";
  /// Per-process membership file; ignored when `cgroup_path` is set.
  std::filesystem::path membership_file = "/proc/self/cgroup";
  /// Explicit cgroup of the process relative to `cgroup_root`.
  std::optional<std::string> cgroup_path;
  /// Replaces the affinity query; used to pin host shape in tests.
  std::optional<int> affinity_cpus;
};

/// Combines override, cgroup v2, cgroup v1 and affinity, in that precedence.
/// Never throws for an unreadable or malformed cgroup tree; problems are
/// recorded in CpuBudget::warnings and the affinity-only budget is used.
CpuBudget effective_cpus(const DetectOptions& options);

/// effective_cpus() with the override read from FRIENDLY_CPUS and the
/// system's cgroup tree.
CpuBudget detect_cpu_budget();

}  // namespace friendlypool
