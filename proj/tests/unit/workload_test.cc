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

#include <gtest/gtest.h>

#include <chrono>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "friendlypool/clock.h"

namespace friendlypool {
namespace {

using namespace std::chrono_literals;

std::uint64_t iterative_fib(unsigned n) {
  std::uint64_t a = 0, b = 1;
  for (unsigned i = 0; i < n; ++i) {
    const std::uint64_t next = a + b;
    a = b;
    b = next;
  }
  return a;
}

TEST(FibTest, MatchesIterativeOracle) {
  for (unsigned n = 0; n <= 30; ++n) EXPECT_EQ(fib(n), iterative_fib(n)) << n;
  EXPECT_EQ(fib(30), 832040u);
}

TEST(FibTest, RejectsOversizedInput) {
  EXPECT_THROW(fib(41), std::invalid_argument);
  EXPECT_THROW(fib_contended(41, global_fib_lock()), std::invalid_argument);
}

TEST(FibTest, ContendedMatchesOracle) {
  std::mutex lock;
  for (unsigned n = 0; n <= 25; ++n) EXPECT_EQ(fib_contended(n, lock, 20), iterative_fib(n)) << n;
}

TEST(FibTest, LockDepthCapsAtThirty) {
  EXPECT_EQ(contended_lock_depth(10), 10u);
  EXPECT_EQ(contended_lock_depth(30), 30u);
  EXPECT_EQ(contended_lock_depth(32), 30u);
}

TEST(FibContendedTest, ShallowTreeNeverTouchesLock) {
  std::mutex lock;
  std::lock_guard held(lock);
  auto f = std::async(std::launch::async, [&] { return fib_contended(10, lock, 30); });
  ASSERT_EQ(f.wait_for(2s), std::future_status::ready);
  EXPECT_EQ(f.get(), 55u);
}

TEST(FibContendedTest, DeepTreeWaitsForLock) {
  std::mutex lock;
  std::unique_lock held(lock);
  auto f = std::async(std::launch::async, [&] { return fib_contended(31, lock, 30); });
  EXPECT_EQ(f.wait_for(100ms), std::future_status::timeout);
  held.unlock();
  EXPECT_EQ(f.get(), iterative_fib(31));
}

TEST(DriverTest, ScheduledCountCoversHalfOpenInterval) {
  EXPECT_EQ(scheduled_item_count(100.0, 5s), 500u);
  EXPECT_EQ(scheduled_item_count(10.0, 100ms), 1u);
  EXPECT_EQ(scheduled_item_count(3.0, 1s), 3u);
  EXPECT_EQ(scheduled_item_count(1.0, 1ns), 1u);
}

TEST(DriverTest, RejectsBadConfig) {
  DriverConfig c;
  c.target_rate = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.target_rate = 10;
  c.duration = 0s;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.duration = 1s;
  c.fib_n = 41;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(DriverTest, EmitsOnScheduleForTheWholeDuration) {
  DriverConfig c;
  c.target_rate = 100.0;
  c.duration = 5s;
  std::vector<WorkItem> items;
  const auto report = open_loop_driver(c, [&](WorkItem it) { items.push_back(it); });
  EXPECT_NEAR(static_cast<double>(report.emitted), 500.0, 1.0);
  ASSERT_EQ(items.size(), report.emitted);
  for (std::size_t k = 0; k < items.size(); ++k) {
    EXPECT_EQ(items[k].id, k);
    EXPECT_GE(items[k].queue_start_ns - report.start_ns, static_cast<std::int64_t>(k) * 10'000'000);
  }
  EXPECT_GE(report.end_ns - report.start_ns, 4'990'000'000);
}

TEST(DriverTest, ShortRunEmitsSingleItem) {
  DriverConfig c;
  c.target_rate = 10.0;
  c.duration = 100ms;
  std::uint64_t n = 0;
  const auto report = open_loop_driver(c, [&](WorkItem) { ++n; });
  EXPECT_EQ(report.emitted, 1u);
  EXPECT_EQ(n, 1u);
}

TEST(DriverTest, SlowSinkCountsLagButKeepsEveryItem) {
  DriverConfig c;
  c.target_rate = 200.0;
  c.duration = 200ms;
  std::uint64_t n = 0;
  const auto report = open_loop_driver(c, [&](WorkItem) {
    ++n;
    if (n == 5) std::this_thread::sleep_for(50ms);
  });
  EXPECT_EQ(report.emitted, 40u);
  EXPECT_EQ(n, 40u);
  EXPECT_GE(report.lag_events, 1u);
}

TEST(ProcessItemTest, StampsAreOrderedAndResultCorrect) {
  WorkItem item;
  item.fib_n = 20;
  item.queue_start_ns = monotonic_now_ns();
  const auto lat = process_item(item, false);
  EXPECT_LE(item.queue_start_ns, item.fib_start_ns);
  EXPECT_LE(item.fib_start_ns, item.end_ns);
  EXPECT_EQ(item.result, 6765u);
  EXPECT_EQ(lat.queue_latency_ns, item.fib_start_ns - item.queue_start_ns);
  EXPECT_EQ(lat.fib_latency_ns, item.end_ns - item.fib_start_ns);
  EXPECT_LT(lat.queue_latency_ns, 1'000'000);
}

TEST(ProcessItemTest, ContendedItemComputesSameResult) {
  WorkItem item;
  item.fib_n = 22;
  item.queue_start_ns = monotonic_now_ns();
  process_item(item, true);
  EXPECT_EQ(item.result, iterative_fib(22));
}

TEST(CalibrationTest, LandsInsideWindow) {
  const auto cal = calibrate(5ms, 20ms);
  EXPECT_GE(cal.fib_n, 20u);
  EXPECT_LE(cal.fib_n, kMaxFibN);
  EXPECT_GT(cal.item_time.count(), 0);
  EXPECT_NEAR(cal.capacity_per_thread, 1e9 / static_cast<double>(cal.item_time.count()), 1e-6);
  // Re-measure: timing noise aside, the pick should sit near the window.
  const auto again = measure_fib(cal.fib_n, 3);
  EXPECT_GT(again, 2ms);
  EXPECT_LT(again, 60ms);
}

TEST(SamplesCsvTest, WritesHeaderAndRows) {
  std::vector<WorkItem> items(2);
  items[0] = {0, 30, 1, 2, 3, 0};
  items[1] = {1, 30, 4, 5, 6, 0};
  std::ostringstream out;
  write_samples_csv(out, items);
  EXPECT_EQ(out.str(), "id,queue_start_ns,fib_start_ns,end_ns\n0,1,2,3\n1,4,5,6\n");
}

}  // namespace
}  // namespace friendlypool
