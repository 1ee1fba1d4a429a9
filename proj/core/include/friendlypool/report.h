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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "friendlypool/harness.h"
#include "friendlypool/pool.h"
#include "friendlypool/svg_plot.h"
#include "friendlypool/workload.h"

namespace friendlypool {

/// Nearest-rank percentile of an ascending sequence: the element at
/// 1-based rank ceil(q * N); q = 0 gives the minimum.
/// Throws std::invalid_argument for empty input or q outside [0, 1].
std::int64_t percentile(std::span<const std::int64_t> sorted, double q);

/// Middle element, or the mean of the two middle elements for even sizes.
double median(std::vector<double> values);

/// Completed items per second.
double throughput(std::size_t completed, double duration_seconds);

struct LatencySummary {
  std::size_t count = 0;
  std::int64_t p50 = 0;
  std::int64_t p90 = 0;
  std::int64_t p99 = 0;
  std::int64_t max = 0;
};

/// All zeros when `values` is empty.
LatencySummary summarize_latencies(std::vector<std::int64_t> values);

struct SampleTable {
  std::vector<WorkItem> items;
  std::size_t rows = 0;
  std::size_t malformed = 0;
};

/// Parses "id,queue_start_ns,fib_start_ns,end_ns" CSV. Rows that do not have
/// four integers in timestamp order are counted as malformed and skipped.
SampleTable parse_samples_csv(std::istream& in);
SampleTable read_samples_csv(const std::filesystem::path& path);

/// Parses the "timestamp_ns,active_count" trace written by the pool.
std::vector<TracePoint> parse_trace_csv(std::istream& in);
std::vector<TracePoint> read_trace_csv(const std::filesystem::path& path);

/// Fraction of trace points at or after `from_ns` whose active count lies
/// within `tolerance` of `target`. 0 when there are no such points.
double fraction_near(std::span<const TracePoint> trace, std::int64_t from_ns, std::size_t target,
                     std::size_t tolerance);

class SummaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One row per (config, repeat, process, metric).
struct SummaryRow {
  std::string experiment_id;
  std::string strategy;
  std::size_t neighbours = 0;
  std::string threads;  // number, or "dynamic"
  std::string overcommit;
  std::string metric;   // "queue_latency" or "fib_latency"
  LatencySummary latency;
  double throughput = 0;
  int repeat = 0;
  std::size_t process = 0;
};

/// Samples of all processes of one repeat pooled together.
struct RepeatAggregate {
  int repeat = 0;
  LatencySummary queue_latency;
  LatencySummary fib_latency;
  double throughput = 0;  // sum over processes
  /// Active-count trace of each process, in process order.
  std::vector<std::vector<TracePoint>> traces;
};

struct ConfigSummary {
  RunManifest manifest;
  std::vector<RepeatAggregate> repeats;
  double median_fib_p99 = 0;
  double median_fib_max = 0;
  double median_queue_p99 = 0;
  double median_throughput = 0;
  std::size_t rows = 0;
  std::size_t malformed = 0;
};

/// ignorant / collaborative for configs that differ only by strategy.
struct RatioRow {
  std::string axis;
  std::string ignorant_id;
  std::string collaborative_id;
  double max_fib_latency_ratio = 0;
  double throughput_ratio = 0;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  std::vector<ConfigSummary> configs;
  std::vector<RatioRow> ratios;
};

/// Reads every CSV a manifest lists. CSV paths are relative to `dir`.
/// Throws SummaryError when more than 1% of rows are malformed.
ConfigSummary summarize_manifest(const RunManifest& manifest, const std::filesystem::path& dir,
                                 std::vector<SummaryRow>* rows = nullptr);

struct LoadedManifest {
  RunManifest manifest;
  std::filesystem::path dir;
};

SummaryTable summarize(std::span<const LoadedManifest> manifests);

/// Finds every manifest.json below `dir` (sorted by path) and summarizes them.
SummaryTable summarize_directory(const std::filesystem::path& dir);

/// "strategy,neighbours,threads,O,metric,p50,p90,p99,max,throughput,repeat,process"
void write_summary_csv(std::ostream& out, const SummaryTable& table);
/// "axis,ignorant,collaborative,max_fib_latency_ratio,throughput_ratio"
void write_ratio_csv(std::ostream& out, const SummaryTable& table);

/// Value of the family's sweep variable for a config (threads, neighbours,
/// O or quota cores).
double sweep_value(const ExperimentConfig& config);

/// Writes fib_latency.svg, queue_latency.svg and throughput.svg into `dir`.
/// Latency plots show per-repeat p99 points; throughput shows the median
/// across repeats with min-max whiskers.
std::vector<std::filesystem::path> write_report_plots(const SummaryTable& table,
                                                      const std::filesystem::path& dir);

}  // namespace friendlypool
