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

#include "friendlypool/harness.h"

#include <sys/stat.h>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "friendlypool/error.h"
#include "friendlypool/report.h"
#include "test_util.h"

namespace friendlypool {
namespace {

namespace fs = std::filesystem;
using namespace std::chrono_literals;
using testing::TempDir;
using testing::write_file;

TEST(StrategyTest, ThreadCounts) {
  EXPECT_EQ(strategy_thread_count(Strategy::ignorant(), 16, 4), (ThreadCount{false, 16}));
  EXPECT_EQ(strategy_thread_count(Strategy::optimal(), 16, 4), (ThreadCount{false, 4}));
  EXPECT_EQ(strategy_thread_count(Strategy::optimal(), 2, 8), (ThreadCount{false, 1}));
  EXPECT_EQ(strategy_thread_count(Strategy::fixed(3), 16, 4), (ThreadCount{false, 3}));
  EXPECT_EQ(strategy_thread_count(Strategy::collaborative(), 16, 4), (ThreadCount{true, 16}));
}

TEST(StrategyTest, ParseAndPrint) {
  EXPECT_EQ(Strategy::parse("ignorant"), Strategy::ignorant());
  EXPECT_EQ(Strategy::parse("collaborative"), Strategy::collaborative());
  EXPECT_EQ(Strategy::parse("optimal"), Strategy::optimal());
  EXPECT_EQ(Strategy::parse("static(8)"), Strategy::fixed(8));
  EXPECT_EQ(Strategy::parse("static:2"), Strategy::fixed(2));
  EXPECT_EQ(Strategy::fixed(8).to_string(), "static(8)");
  for (const char* bad : {"", "static()", "static(0)", "static(x)", "greedy", "static:"}) {
    EXPECT_THROW(Strategy::parse(bad), ParseError) << bad;
  }
}

TEST(FamilyTest, RoundTrip) {
  for (Family f : {Family::thread_sweep, Family::quota_sweep, Family::neighbour_sweep,
                   Family::overcommit_sweep}) {
    EXPECT_EQ(parse_family(to_string(f)), f);
  }
  EXPECT_THROW(parse_family("sweep"), ParseError);
}

TEST(ExperimentConfigTest, IdIsStableAndDistinguishing) {
  ExperimentConfig a;
  a.strategy = Strategy::collaborative();
  a.neighbours = 3;
  ExperimentConfig b = a;
  EXPECT_EQ(experiment_id(a), experiment_id(b));
  b.overcommit = Rational(2);
  EXPECT_NE(experiment_id(a), experiment_id(b));
  b = a;
  b.strategy = Strategy::fixed(4);
  EXPECT_NE(experiment_id(a), experiment_id(b));
  EXPECT_EQ(experiment_id(b).find_first_of("()/ "), std::string::npos);
}

TEST(ExperimentConfigTest, QuotaSweepWithoutCgroupIsActionable) {
  ExperimentConfig c;
  c.family = Family::quota_sweep;
  try {
    validate(c);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("--cgroup"), std::string::npos);
  }
}

TEST(ExperimentConfigTest, RejectsBadValues) {
  ExperimentConfig c;
  c.repeats = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.rate = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.fib_n = 41;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.quota_cores = Rational(0);
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(ManifestTest, JsonRoundTrip) {
  RunManifest m;
  m.config.family = Family::overcommit_sweep;
  m.config.strategy = Strategy::collaborative();
  m.config.overcommit = Rational(5, 4);
  m.config.quota_cores = Rational(3, 2);
  m.config.cgroup_path = "/sys/fs/cgroup/friendly";
  m.experiment_id = experiment_id(m.config);
  m.host = {8, 8, 100, "Linux", "Linux 6.1", "box"};
  m.warnings = {"w"};
  RepeatRecord r;
  r.index = 1;
  r.attempts = 2;
  r.ok = true;
  r.overlap = 0.97;
  r.processes.push_back({0, 42, 8, true, "r1_p0_samples.csv", "r1_p0_trace.csv", 1, 2, 3, 4, 5, 0});
  m.repeats.push_back(r);

  const RunManifest back = manifest_from_json(manifest_to_json(m));
  EXPECT_EQ(manifest_to_json(back), manifest_to_json(m));
  EXPECT_EQ(back.config.overcommit, Rational(5, 4));
  EXPECT_EQ(back.config.quota_cores, Rational(3, 2));
  ASSERT_EQ(back.repeats.size(), 1u);
  EXPECT_EQ(back.repeats[0].processes[0].pid, 42);
  EXPECT_THROW(manifest_from_json("{}"), ParseError);
  EXPECT_THROW(manifest_from_json("not json"), ParseError);
}

TEST(WorkerCommandTest, CarriesConfig) {
  HarnessOptions o;
  o.worker_executable = "/bin/bench";
  ExperimentConfig c;
  c.contention = true;
  const auto argv = worker_command(o, c, 4, 8, "/out/s.csv", "/out/t.csv");
  ASSERT_GE(argv.size(), 2u);
  EXPECT_EQ(argv[0], "/bin/bench");
  EXPECT_EQ(argv[1], "worker");
  EXPECT_EQ(argv.back(), "--contention");
  std::string joined;
  for (const auto& a : argv) joined += a + " ";
  EXPECT_NE(joined.find("--processes 4"), std::string::npos);
  EXPECT_NE(joined.find("--cpus 8"), std::string::npos);
}

// A stand-in worker that speaks the line protocol without doing any work.
fs::path write_script(const fs::path& path, const std::string& body) {
  write_file(path, "#!/bin/sh\n" + body);
  ::chmod(path.c_str(), 0755);
  return path;
}

constexpr const char* kGoodWorker =
    "echo \"READY $$ 1 0\"\n"
    "read line\n"
    "echo \"DONE 1000 1000001000 10 10 0\"\n";

TEST(SpawnTest, StartsMeasuredProcessPlusNeighbours) {
  TempDir tmp;
  const auto script = write_script(tmp.path() / "w.sh", kGoodWorker);
  ProcessGroup group = spawn_neighbours(3, [&](std::size_t) { return std::vector<std::string>{script}; }, 5s);
  EXPECT_EQ(group.size(), 4u);
  group.release();
  for (auto& child : group.children()) {
    const auto line = child.read_line(5s);
    ASSERT_TRUE(line);
    EXPECT_TRUE(line->starts_with("DONE"));
    EXPECT_EQ(child.wait(), 0);
  }
}

TEST(SpawnTest, ProcessThatNeverReportsReadyFails) {
  TempDir tmp;
  const auto script = write_script(tmp.path() / "w.sh", "exit 1\n");
  EXPECT_THROW(spawn_neighbours(1, [&](std::size_t) { return std::vector<std::string>{script}; }, 5s),
               std::runtime_error);
}

ExperimentConfig script_config() {
  ExperimentConfig c;
  c.strategy = Strategy::fixed(1);
  c.neighbours = 1;
  c.repeats = 2;
  c.duration = 1000ms;
  c.rate = 10;
  c.fib_n = 10;
  return c;
}

TEST(RunExperimentTest, ScriptedWorkersProduceManifest) {
  TempDir tmp;
  HarnessOptions o;
  o.worker_executable = write_script(tmp.path() / "w.sh", kGoodWorker);
  o.out_dir = tmp.path() / "out";
  const auto m = run_experiment(script_config(), o);
  ASSERT_EQ(m.repeats.size(), 2u);
  for (const auto& r : m.repeats) {
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.attempts, 1);
    EXPECT_EQ(r.processes.size(), 2u);
    EXPECT_DOUBLE_EQ(r.overlap, 1.0);
  }
  const auto on_disk = read_manifest(o.out_dir / m.experiment_id / kManifestFile);
  EXPECT_EQ(manifest_to_json(on_disk), manifest_to_json(m));
}

TEST(RunExperimentTest, RepeatFailingOnceIsRetried) {
  TempDir tmp;
  const fs::path marker = tmp.path() / "crashed";
  HarnessOptions o;
  o.worker_executable = write_script(
      tmp.path() / "w.sh", "if [ ! -e " + marker.string() + " ]; then touch " + marker.string() +
                               "; exit 3; fi\n" + kGoodWorker);
  o.out_dir = tmp.path() / "out";
  auto config = script_config();
  config.repeats = 1;
  const auto m = run_experiment(config, o);
  ASSERT_EQ(m.repeats.size(), 1u);
  EXPECT_EQ(m.repeats[0].attempts, 2);
  EXPECT_TRUE(m.repeats[0].ok);
  EXPECT_FALSE(m.repeats[0].error.empty());
}

TEST(RunExperimentTest, RepeatFailingTwiceAbortsAndKeepsPartialManifest) {
  TempDir tmp;
  const fs::path count = tmp.path() / "count";
  HarnessOptions o;
  // Succeeds for the first repeat (2 processes), crashes from then on.
  o.worker_executable = write_script(
      tmp.path() / "w.sh", "echo x >> " + count.string() + "\nif [ $(wc -l < " + count.string() +
                               ") -gt 2 ]; then exit 3; fi\n" + kGoodWorker);
  o.out_dir = tmp.path() / "out";
  const auto config = script_config();
  EXPECT_THROW(run_experiment(config, o), std::runtime_error);
  const auto m = read_manifest(o.out_dir / experiment_id(config) / kManifestFile);
  EXPECT_EQ(m.repeats.size(), 1u);
  EXPECT_FALSE(m.warnings.empty());
}

TEST(RunExperimentTest, PoorOverlapCountsAsFailure) {
  TempDir tmp;
  HarnessOptions o;
  // Process 0 runs 0-1 s, process 1 runs 0.5-1.5 s: overlap 50%.
  o.worker_executable = write_script(tmp.path() / "w.sh",
                                     "echo \"READY $$ 1 0\"\nread line\n"
                                     "case \"$*\" in\n"
                                     "  *_p0_*) echo \"DONE 0 1000000000 1 1 0\" ;;\n"
                                     "  *) echo \"DONE 500000000 1500000000 1 1 0\" ;;\n"
                                     "esac\n");
  o.out_dir = tmp.path() / "out";
  auto config = script_config();
  config.repeats = 1;
  EXPECT_THROW(run_experiment(config, o), std::runtime_error);
}

TEST(RunExperimentTest, MissingCgroupIsActionable) {
  TempDir tmp;
  HarnessOptions o;
  o.worker_executable = write_script(tmp.path() / "w.sh", kGoodWorker);
  o.out_dir = tmp.path() / "out";
  auto config = script_config();
  config.family = Family::quota_sweep;
  config.cgroup_path = tmp.path() / "no-such-cgroup";
  config.quota_cores = Rational(2);
  try {
    run_experiment(config, o);
    FAIL() << "expected failure";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("mkdir"), std::string::npos) << e.what();
  }
}

TEST(RunExperimentTest, RealWorkersEndToEnd) {
  TempDir tmp;
  HarnessOptions o;
  o.worker_executable = FRIENDLYPOOL_BENCH_EXE;
  o.out_dir = tmp.path() / "out";
  ExperimentConfig a;
  a.strategy = Strategy::ignorant();
  a.neighbours = 1;
  a.repeats = 1;
  a.duration = 1000ms;
  a.rate = 20;
  a.fib_n = 20;
  ExperimentConfig b = a;
  b.strategy = Strategy::collaborative();
  const ExperimentConfig configs[] = {a, b};
  const auto manifests = run_experiments(configs, o);
  ASSERT_EQ(manifests.size(), 2u);
  const auto table = summarize_directory(o.out_dir);
  EXPECT_EQ(table.configs.size(), 2u);
  // 1 repeat x 2 processes x 2 metrics per config.
  EXPECT_EQ(table.rows.size(), 8u);
  ASSERT_EQ(table.ratios.size(), 1u);
  for (const auto& c : table.configs) {
    ASSERT_EQ(c.repeats.size(), 1u);
    EXPECT_NEAR(c.repeats[0].throughput, 40.0, 4.0);
    EXPECT_EQ(c.malformed, 0u);
  }
}

}  // namespace
}  // namespace friendlypool
