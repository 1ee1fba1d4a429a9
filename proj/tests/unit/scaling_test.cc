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

#include "friendlypool/scaling.h"

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <random>

namespace friendlypool {
namespace {

using namespace std::chrono_literals;
using boost::multiprecision::cpp_rational;

// Direct re-evaluation of clamp(ceil(O * (s / a) * C), 1, max) in arbitrary
// precision rationals, kept apart from the integer path under test.
std::size_t oracle(const Rational& o, std::int64_t self, std::int64_t all, std::size_t cpus,
                   std::size_t max_threads) {
  if (all == 0) return max_threads;
  const cpp_rational value = cpp_rational(o.num(), o.den()) * cpp_rational(self, all) * cpp_rational(cpus);
  auto floor = boost::multiprecision::cpp_int(numerator(value) / denominator(value));
  const auto ceil = floor * denominator(value) == numerator(value) ? floor : floor + 1;
  if (ceil < 1) return 1;
  if (ceil > max_threads) return max_threads;
  return static_cast<std::size_t>(ceil);
}

TEST(ComputeActiveThreadsTest, AloneOnHost) {
  EXPECT_EQ(compute_active_threads(Rational(1), 100ms, 100ms, 16, 16), 16u);
}

TEST(ComputeActiveThreadsTest, EvenlySplitWithNeighbour) {
  EXPECT_EQ(compute_active_threads(Rational(1), 50ms, 100ms, 16, 16), 8u);
}

TEST(ComputeActiveThreadsTest, OvercommitFactor) {
  EXPECT_EQ(compute_active_threads(Rational(5, 4), 50ms, 100ms, 16, 16), 10u);
}

TEST(ComputeActiveThreadsTest, LowerClamp) {
  EXPECT_EQ(compute_active_threads(Rational(1), 1ms, 100ms, 16, 16), 1u);
  EXPECT_EQ(compute_active_threads(Rational(1), 0ms, 100ms, 16, 16), 1u);
}

TEST(ComputeActiveThreadsTest, IdleIntervalGivesMax) {
  EXPECT_EQ(compute_active_threads(Rational(1), 0ms, 0ms, 16, 12), 12u);
}

TEST(ComputeActiveThreadsTest, UpperClamp) {
  EXPECT_EQ(compute_active_threads(Rational(4), 50ms, 100ms, 16, 16), 16u);
  // Accounting slop can make self exceed all by a tick.
  EXPECT_EQ(compute_active_threads(Rational(1), 110ms, 100ms, 16, 16), 16u);
}

TEST(ComputeActiveThreadsTest, ExactAtIntegerBoundaries) {
  // 0.3 * 10 = 3 exactly; floating point would give 3.0000000000000004.
  EXPECT_EQ(compute_active_threads(Rational::parse("0.3"), 1s, 1s, 10, 64), 3u);
  EXPECT_EQ(compute_active_threads(Rational(1), 3ms, 10ms, 10, 64), 3u);
  EXPECT_EQ(compute_active_threads(Rational(1), 3ms + 1ns, 10ms, 10, 64), 4u);
}

TEST(ComputeActiveThreadsTest, RejectsNonPositiveFactor) {
  EXPECT_THROW(compute_active_threads(Rational(0), 1ms, 1ms, 1, 1), std::invalid_argument);
}

TEST(ComputeActiveThreadsProperty, MatchesRationalOracle) {
  std::mt19937_64 rng(20240229);
  std::uniform_int_distribution<std::int64_t> o_num(1, 400), o_den(1, 100);
  std::uniform_int_distribution<std::int64_t> all_ns(0, 10'000'000'000);
  std::uniform_real_distribution<double> share(0.0, 1.05);
  std::uniform_int_distribution<std::size_t> cpus(1, 512), max_t(1, 1024);
  for (int i = 0; i < 10000; ++i) {
    const Rational o(o_num(rng), o_den(rng));
    const std::int64_t all = all_ns(rng);
    const auto self = static_cast<std::int64_t>(static_cast<double>(all) * share(rng));
    const std::size_t c = cpus(rng), m = max_t(rng);
    ASSERT_EQ(compute_active_threads(o, std::chrono::nanoseconds(self), std::chrono::nanoseconds(all), c, m),
              oracle(o, self, all, c, m))
        << "O=" << o << " self=" << self << " all=" << all << " cpus=" << c << " max=" << m;
  }
}

TEST(ComputeActiveThreadsProperty, AlwaysWithinBounds) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> ns(0, 1'000'000'000);
  for (int i = 0; i < 2000; ++i) {
    const auto n = compute_active_threads(Rational(1 + i % 7, 1 + i % 3), std::chrono::nanoseconds(ns(rng)),
                                          std::chrono::nanoseconds(ns(rng)), 1 + i % 64, 1 + i % 32);
    EXPECT_GE(n, 1u);
    EXPECT_LE(n, 1u + i % 32);
  }
}

}  // namespace
}  // namespace friendlypool
