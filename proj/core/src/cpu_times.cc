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

#include "friendlypool/cpu_times.h"

#include <unistd.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "friendlypool/error.h"

namespace friendlypool {
namespace {

std::uint64_t to_u64(std::string_view s, std::string_view whole) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("expected an unsigned counter", std::string(whole));
  }
  return v;
}

std::vector<std::string_view> fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\n') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
    if (i < s.size() && s[i] == '\n') break;
  }
  return out;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SampleError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::uint64_t parse_process_stat_ticks(std::string_view text) {
  // comm (field 2) may contain spaces and parentheses; fields resume after the last ')'.
  const auto close = text.rfind(')');
  if (close == std::string_view::npos) throw ParseError("no comm field in stat", std::string(text));
  const auto rest = fields(text.substr(close + 1));
  // rest[0] is field 3 (state); utime and stime are fields 14 and 15.
  if (rest.size() < 13) throw ParseError("truncated stat line", std::string(text));
  return to_u64(rest[11], text) + to_u64(rest[12], text);
}

std::uint64_t parse_system_stat_busy_ticks(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    if (line.starts_with("cpu ")) {
      const auto f = fields(line);
      // cpu user nice system idle iowait irq softirq steal guest guest_nice
      if (f.size() < 8) throw ParseError("truncated cpu line", std::string(line));
      std::uint64_t busy = to_u64(f[1], line) + to_u64(f[2], line) + to_u64(f[3], line) +
                           to_u64(f[6], line) + to_u64(f[7], line);
      if (f.size() > 8) busy += to_u64(f[8], line);
      return busy;
    }
    pos = end + 1;
  }
  throw ParseError("no aggregate cpu line", std::string(text.substr(0, 200)));
}

long clock_ticks_per_second() {
  const long hz = sysconf(_SC_CLK_TCK);
  return hz > 0 ? hz : 100;
}

ProcCpuTimeSampler::ProcCpuTimeSampler()
    : ProcCpuTimeSampler("/proc/self/stat", "/proc/stat", clock_ticks_per_second()) {}

ProcCpuTimeSampler::ProcCpuTimeSampler(std::filesystem::path self_stat,
                                       std::filesystem::path system_stat, long ticks_per_second)
    : self_stat_(std::move(self_stat)),
      system_stat_(std::move(system_stat)),
      ticks_per_second_(ticks_per_second) {}

CpuTimeSample ProcCpuTimeSampler::sample() {
  CpuTimeSample out;
  try {
    const auto self_ticks = parse_process_stat_ticks(slurp(self_stat_));
    const auto all_ticks = parse_system_stat_busy_ticks(slurp(system_stat_));
    const std::int64_t ns_per_tick = 1'000'000'000 / ticks_per_second_;
    out.self_time = std::chrono::nanoseconds(static_cast<std::int64_t>(self_ticks) * ns_per_tick);
    out.all_time = std::chrono::nanoseconds(static_cast<std::int64_t>(all_ticks) * ns_per_tick);
  } catch (const ParseError& e) {
    throw SampleError(e.what());
  }
  out.taken_at = std::chrono::steady_clock::now();
  return out;
}

CpuTimeSample sample_cpu_times() {
  static thread_local ProcCpuTimeSampler sampler;
  return sampler.sample();
}

}  // namespace friendlypool
