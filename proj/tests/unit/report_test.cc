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

#include "friendlypool/report.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "friendlypool/error.h"
#include "test_util.h"

namespace friendlypool {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;
using testing::write_file;

// Nearest rank by definition: smallest sample v with #{x <= v} >= q * N.
std::int64_t percentile_oracle(const std::vector<std::int64_t>& values, double q) {
  std::vector<std::int64_t> candidates = values;
  std::sort(candidates.begin(), candidates.end());
  for (auto v : candidates) {
    const auto at_or_below = std::count_if(values.begin(), values.end(), [&](auto x) { return x <= v; });
    if (static_cast<double>(at_or_below) >= q * static_cast<double>(values.size())) return v;
  }
  return candidates.back();
}

TEST(PercentileTest, Examples) {
  const std::vector<std::int64_t> v{10, 20, 30, 40};
  EXPECT_EQ(percentile(v, 0.5), 20);
  EXPECT_EQ(percentile(v, 1.0), 40);
  EXPECT_EQ(percentile(v, 0.0), 10);
  EXPECT_EQ(percentile(v, 0.99), 40);
  const std::vector<std::int64_t> one{7};
  for (double q : {0.0, 0.5, 0.9, 0.99, 1.0}) EXPECT_EQ(percentile(one, q), 7);
}

TEST(PercentileTest, RejectsBadInput) {
  const std::vector<std::int64_t> empty;
  EXPECT_THROW(percentile(empty, 0.5), std::invalid_argument);
  const std::vector<std::int64_t> v{1, 2};
  EXPECT_THROW(percentile(v, -0.1), std::invalid_argument);
  EXPECT_THROW(percentile(v, 1.1), std::invalid_argument);
}

TEST(PercentileTest, AgreesWithOracleAndIsMonotone) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::int64_t> v(1 + rng() % 200);
    for (auto& x : v) x = static_cast<std::int64_t>(rng() % 1000);
    std::vector<std::int64_t> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::int64_t prev = INT64_MIN;
    for (double q : {0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0}) {
      const auto p = percentile(sorted, q);
      ASSERT_EQ(p, percentile_oracle(v, q)) << "q=" << q << " n=" << v.size();
      ASSERT_GE(p, prev);
      prev = p;
    }
  }
}

TEST(MedianTest, OddAndEven) {
  EXPECT_DOUBLE_EQ(median({90, 110}), 100.0);
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_THROW(median({}), std::invalid_argument);
}

TEST(ThroughputTest, CompletedPerSecond) {
  EXPECT_DOUBLE_EQ(throughput(500, 5.0), 100.0);
  EXPECT_DOUBLE_EQ(throughput(0, 5.0), 0.0);
  EXPECT_THROW(throughput(1, 0.0), std::invalid_argument);
}

TEST(SummarizeLatenciesTest, Fields) {
  std::vector<std::int64_t> v;
  for (int i = 100; i >= 1; --i) v.push_back(i);
  const auto s = summarize_latencies(v);
  EXPECT_EQ(s.count, 100u);
  EXPECT_EQ(s.p50, 50);
  EXPECT_EQ(s.p90, 90);
  EXPECT_EQ(s.p99, 99);
  EXPECT_EQ(s.max, 100);
  EXPECT_EQ(summarize_latencies({}).count, 0u);
}

TEST(SamplesCsvTest, CountsMalformedRows) {
  std::istringstream in(
      "id,queue_start_ns,fib_start_ns,end_ns\n"
      "0,1,2,3\n"
      "1,5,4,6\n"     // fib_start before queue_start
      "2,1,2\n"       // short row
      "3,a,2,3\n"
      "4,10,20,30\n");
  const auto t = parse_samples_csv(in);
  EXPECT_EQ(t.rows, 5u);
  EXPECT_EQ(t.malformed, 3u);
  ASSERT_EQ(t.items.size(), 2u);
  EXPECT_EQ(t.items[1].end_ns, 30);
  std::istringstream bad("id,x\n");
  EXPECT_THROW(parse_samples_csv(bad), ParseError);
}

TEST(TraceCsvTest, ParsesAndMeasuresStability) {
  std::istringstream in("timestamp_ns,active_count\n0,8\n10,4\n20,4\n30,5\n40,2\n");
  const auto trace = parse_trace_csv(in);
  ASSERT_EQ(trace.size(), 5u);
  EXPECT_DOUBLE_EQ(fraction_near(trace, 10, 4, 1), 0.75);
  EXPECT_DOUBLE_EQ(fraction_near(trace, 100, 4, 1), 0.0);
  std::istringstream bad("timestamp_ns,active_count\n1,-2\n");
  EXPECT_THROW(parse_trace_csv(bad), ParseError);
}

// Writes a manifest whose every process has the same `items` samples.
RunManifest write_fake_run(const fs::path& root, Strategy strategy, int repeats, std::size_t processes,
                           const std::string& samples, std::size_t neighbours = 1) {
  RunManifest m;
  m.config.family = Family::neighbour_sweep;
  m.config.strategy = strategy;
  m.config.neighbours = neighbours;
  m.config.repeats = repeats;
  m.config.duration = std::chrono::milliseconds(5000);
  m.config.cpus = 4;
  m.experiment_id = experiment_id(m.config);
  m.host.cpus = m.host.affinity_cpus = 4;
  const fs::path dir = root / m.experiment_id;
  for (int r = 0; r < repeats; ++r) {
    RepeatRecord rec;
    rec.index = r;
    rec.ok = true;
    rec.attempts = 1;
    for (std::size_t p = 0; p < processes; ++p) {
      ProcessRecord proc;
      proc.index = p;
      proc.samples_csv = "r" + std::to_string(r) + "_p" + std::to_string(p) + "_samples.csv";
      proc.trace_csv = "r" + std::to_string(r) + "_p" + std::to_string(p) + "_trace.csv";
      write_file(dir / proc.samples_csv, samples);
      write_file(dir / proc.trace_csv, "timestamp_ns,active_count\n0,4\n");
      rec.processes.push_back(proc);
    }
    m.repeats.push_back(rec);
  }
  write_manifest(dir / kManifestFile, m);
  return m;
}

std::string samples_csv(int n, std::int64_t fib_ns) {
  std::string s = "id,queue_start_ns,fib_start_ns,end_ns\n";
  for (int i = 0; i < n; ++i) {
    const std::int64_t q = i * 1'000'000;
    s += std::to_string(i) + "," + std::to_string(q) + "," + std::to_string(q + 10) + "," +
         std::to_string(q + 10 + fib_ns + i) + "\n";
  }
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(SummaryTest, OneRowPerRepeatProcessAndMetric) {
  TempDir tmp;
  write_fake_run(tmp.path(), Strategy::collaborative(), 5, 2, samples_csv(500, 1000));
  const auto table = summarize_directory(tmp.path());
  EXPECT_EQ(table.rows.size(), 5u * 2u * 2u);
  ASSERT_EQ(table.configs.size(), 1u);
  const auto& c = table.configs[0];
  EXPECT_EQ(c.repeats.size(), 5u);
  EXPECT_DOUBLE_EQ(c.median_throughput, 200.0);  // 2 processes x 500 items / 5 s
  EXPECT_DOUBLE_EQ(c.median_fib_max, 1000.0 + 499.0);
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.threads, "dynamic");
    EXPECT_DOUBLE_EQ(row.throughput, 100.0);
  }
}

TEST(SummaryTest, IdenticalRunsGiveUnitRatios) {
  TempDir tmp;
  const auto samples = samples_csv(200, 5000);
  write_fake_run(tmp.path(), Strategy::ignorant(), 3, 2, samples);
  write_fake_run(tmp.path(), Strategy::collaborative(), 3, 2, samples);
  const auto table = summarize_directory(tmp.path());
  ASSERT_EQ(table.ratios.size(), 1u);
  EXPECT_EQ(table.ratios[0].max_fib_latency_ratio, 1.0);
  EXPECT_EQ(table.ratios[0].throughput_ratio, 1.0);
}

TEST(SummaryTest, RatioOfDifferentRuns) {
  TempDir tmp;
  write_fake_run(tmp.path(), Strategy::ignorant(), 1, 1, samples_csv(100, 2001));
  write_fake_run(tmp.path(), Strategy::collaborative(), 1, 1, samples_csv(200, 901));
  const auto table = summarize_directory(tmp.path());
  ASSERT_EQ(table.ratios.size(), 1u);
  EXPECT_DOUBLE_EQ(table.ratios[0].max_fib_latency_ratio, (2001.0 + 99) / (901.0 + 199));
  EXPECT_DOUBLE_EQ(table.ratios[0].throughput_ratio, 0.5);
}

TEST(SummaryTest, DifferentNeighbourCountsAreNotCompared) {
  TempDir tmp;
  write_fake_run(tmp.path(), Strategy::ignorant(), 1, 1, samples_csv(10, 1), 1);
  write_fake_run(tmp.path(), Strategy::collaborative(), 1, 1, samples_csv(10, 1), 2);
  EXPECT_TRUE(summarize_directory(tmp.path()).ratios.empty());
}

TEST(SummaryTest, TooManyMalformedRowsFail) {
  TempDir tmp;
  std::string samples = samples_csv(98, 1000);
  samples += "x,1,2,3\n";
  samples += "99,5,4,3\n";
  write_fake_run(tmp.path(), Strategy::ignorant(), 1, 1, samples);
  EXPECT_THROW(summarize_directory(tmp.path()), SummaryError);
}

TEST(SummaryTest, OneMalformedRowInAHundredIsTolerated) {
  TempDir tmp;
  std::string samples = samples_csv(99, 1000);
  samples += "x,1,2,3\n";
  write_fake_run(tmp.path(), Strategy::ignorant(), 1, 1, samples);
  const auto table = summarize_directory(tmp.path());
  EXPECT_EQ(table.configs[0].malformed, 1u);
}

TEST(SummaryTest, OutputIsDeterministic) {
  TempDir tmp;
  write_fake_run(tmp.path() / "in", Strategy::ignorant(), 2, 2, samples_csv(50, 700));
  write_fake_run(tmp.path() / "in", Strategy::collaborative(), 2, 2, samples_csv(50, 600));
  std::string first, second, first_ratio;
  for (std::string* out : {&first, &second}) {
    const auto table = summarize_directory(tmp.path() / "in");
    std::ostringstream s, r;
    write_summary_csv(s, table);
    write_ratio_csv(r, table);
    *out = s.str() + r.str();
  }
  EXPECT_EQ(first, second);
  EXPECT_TRUE(first.starts_with("strategy,neighbours,threads,O,metric,p50,p90,p99,max,throughput,repeat,process\n"));
}

TEST(SummaryTest, PlotsAreWritten) {
  TempDir tmp;
  write_fake_run(tmp.path() / "in", Strategy::ignorant(), 3, 1, samples_csv(20, 700));
  const auto table = summarize_directory(tmp.path() / "in");
  const auto files = write_report_plots(table, tmp.path());
  ASSERT_EQ(files.size(), 3u);
  for (const auto& f : files) EXPECT_TRUE(slurp(f).starts_with("<svg"));
}

TEST(SweepValueTest, PerFamily) {
  ExperimentConfig c;
  c.family = Family::thread_sweep;
  c.strategy = Strategy::fixed(6);
  EXPECT_EQ(sweep_value(c), 6.0);
  c.family = Family::overcommit_sweep;
  c.overcommit = Rational(3, 2);
  EXPECT_EQ(sweep_value(c), 1.5);
  c.family = Family::neighbour_sweep;
  c.neighbours = 3;
  EXPECT_EQ(sweep_value(c), 3.0);
}

}  // namespace
}  // namespace friendlypool
