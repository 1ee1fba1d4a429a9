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

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "friendlypool/child_process.h"
#include "friendlypool/rational.h"

namespace friendlypool {

enum class Family { thread_sweep, quota_sweep, neighbour_sweep, overcommit_sweep };

std::string_view to_string(Family family);
Family parse_family(std::string_view text);

/// How many worker threads each process in an experiment runs.
struct Strategy {
  enum class Kind { ignorant, collaborative, optimal, fixed };

  Kind kind = Kind::collaborative;
  std::size_t threads = 0;  // Kind::fixed only

  static Strategy ignorant() { return {Kind::ignorant, 0}; }
  static Strategy collaborative() { return {Kind::collaborative, 0}; }
  static Strategy optimal() { return {Kind::optimal, 0}; }
  static Strategy fixed(std::size_t n) { return {Kind::fixed, n}; }

  /// "ignorant", "collaborative", "optimal", "static(N)" or "static:N".
  static Strategy parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

struct ThreadCount {
  bool dynamic = false;
  std::size_t threads = 0;

  friend bool operator==(const ThreadCount&, const ThreadCount&) = default;
};

/// ignorant: cpus. optimal: max(1, cpus / processes). static(n): n.
/// collaborative: dynamic, sized by the pool's control thread.
ThreadCount strategy_thread_count(const Strategy& strategy, std::size_t cpus, std::size_t processes);

struct ExperimentConfig {
  Family family = Family::neighbour_sweep;
  Strategy strategy;
  std::size_t neighbours = 0;
  int repeats = 5;
  std::chrono::milliseconds duration{5000};
  double rate = 100.0;
  unsigned fib_n = 30;
  bool contention = false;
  Rational overcommit{1};
  /// Operator-provisioned cgroup the spawned processes are moved into.
  std::optional<std::filesystem::path> cgroup_path;
  /// Written to the cgroup's quota files before every repeat when set.
  std::optional<Rational> quota_cores;
  /// CPU count handed to the strategies. 0 means the affinity count.
  std::size_t cpus = 0;
  std::chrono::milliseconds poll_interval{10};
};

/// Throws std::invalid_argument with an actionable message.
void validate(const ExperimentConfig& config);

/// Stable, filesystem-safe name derived from every config field that
/// distinguishes runs.
std::string experiment_id(const ExperimentConfig& config);

struct HostMetadata {
  int cpus = 0;
  int affinity_cpus = 0;
  long clock_ticks_per_second = 0;
  std::string os_release;
  std::string kernel;
  std::string hostname;
};

HostMetadata collect_host_metadata();

struct ProcessRecord {
  std::size_t index = 0;
  pid_t pid = 0;
  std::size_t threads = 0;  // worker threads created (max_threads when dynamic)
  bool dynamic = false;
  std::string samples_csv;  // relative to the manifest's directory
  std::string trace_csv;
  std::int64_t run_start_ns = 0;
  std::int64_t run_end_ns = 0;
  std::uint64_t emitted = 0;
  std::uint64_t completed = 0;
  std::uint64_t lag_events = 0;
  int exit_code = 0;
};

struct RepeatRecord {
  int index = 0;
  int attempts = 0;
  bool ok = false;
  double overlap = 0.0;  // fraction of duration during which all processes ran
  std::string error;
  std::vector<ProcessRecord> processes;
};

struct RunManifest {
  std::string experiment_id;
  ExperimentConfig config;
  HostMetadata host;
  std::string started_at;
  std::string finished_at;
  std::vector<RepeatRecord> repeats;
  std::vector<std::string> warnings;
};

std::string manifest_to_json(const RunManifest& manifest);
/// Throws ParseError on malformed JSON or missing fields.
RunManifest manifest_from_json(std::string_view text);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

inline constexpr const char* kManifestFile = "manifest.json";

struct HarnessOptions {
  /// Binary implementing the `worker` subcommand.
  std::filesystem::path worker_executable;
  std::filesystem::path out_dir;
  std::ostream* log = nullptr;
  std::chrono::milliseconds ready_timeout{30000};
  /// Extra time allowed past the run duration for DONE to arrive.
  std::chrono::milliseconds finish_grace{60000};
};

/// Command line of one worker process.
std::vector<std::string> worker_command(const HarnessOptions& options, const ExperimentConfig& config,
                                        std::size_t processes, std::size_t cpus,
                                        const std::filesystem::path& samples_csv,
                                        const std::filesystem::path& trace_csv);

/// Processes of one repeat, blocked until release().
class ProcessGroup {
 public:
  explicit ProcessGroup(std::vector<ChildProcess> children) : children_(std::move(children)) {}

  std::size_t size() const noexcept { return children_.size(); }
  ChildProcess& operator[](std::size_t i) { return children_[i]; }
  std::span<ChildProcess> children() noexcept { return children_; }

  /// Sends the start line to every process.
  void release();
  void kill_all() noexcept;

 private:
  std::vector<ChildProcess> children_;
};

/// Starts the measured process plus `neighbours` identical ones (argv from
/// `command(index)`) and waits until each has reported ready. On any
/// failure the already-started processes are killed and the error rethrown.
ProcessGroup spawn_neighbours(std::size_t neighbours,
                              const std::function<std::vector<std::string>(std::size_t)>& command,
                              std::chrono::milliseconds ready_timeout);

RunManifest run_experiment(const ExperimentConfig& config, const HarnessOptions& options);

/// Runs all configs with repeats interleaved (A1 B1 A2 B2 ...). One
/// manifest per config, written to <out_dir>/<experiment_id>/manifest.json.
std::vector<RunManifest> run_experiments(std::span<const ExperimentConfig> configs,
                                         const HarnessOptions& options);

}  // namespace friendlypool
