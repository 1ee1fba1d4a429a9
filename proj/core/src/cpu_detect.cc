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

#include "friendlypool/cpu_detect.h"

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "friendlypool/error.h"

namespace friendlypool {
namespace fs = std::filesystem;
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::optional<std::int64_t> to_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return ss.str();
}

bool exists_quietly(const fs::path& p) {
  std::error_code ec;
  return fs::exists(p, ec);
}

// Directories from `base` down to `base/relative`. If the leaf does not exist
// (e.g. the membership path is from another cgroup namespace) only `base` is
// returned.
std::vector<fs::path> hierarchy_chain(const fs::path& base, std::string_view relative) {
  std::vector<fs::path> chain{base};
  fs::path cur = base;
  for (const auto& part : fs::path(std::string(relative)).relative_path()) {
    if (part.empty() || part == ".") continue;
    cur /= part;
    chain.push_back(cur);
  }
  if (!exists_quietly(chain.back())) return {base};
  return chain;
}

void keep_tightest(std::optional<QuotaCores>& best, const std::optional<QuotaCores>& candidate) {
  if (candidate && (!best || candidate->value < best->value)) best = candidate;
}

std::optional<QuotaCores> detect_v2(const fs::path& root, std::string_view rel,
                                    std::vector<std::string>& warnings) {
  std::optional<QuotaCores> best;
  for (const fs::path& base : {root, root / "unified"}) {
    if (!exists_quietly(base)) continue;
    for (const auto& dir : hierarchy_chain(base, rel)) {
      const auto file = dir / "cpu.max";
      if (!exists_quietly(file)) continue;
      auto text = read_file(file);
      if (!text) {
        warnings.push_back("cannot read " + file.string());
        continue;
      }
      try {
        keep_tightest(best, parse_cgroup_v2_cpu_max(*text));
      } catch (const ParseError& e) {
        warnings.push_back(file.string() + ": " + e.what());
      }
    }
  }
  return best;
}

std::optional<QuotaCores> detect_v1(const fs::path& root, std::string_view rel,
                                    const std::string& controllers,
                                    std::vector<std::string>& warnings) {
  std::vector<fs::path> bases;
  for (const std::string& name : {controllers, std::string("cpu"), std::string("cpu,cpuacct"),
                                  std::string("cpuacct,cpu")}) {
    if (name.empty()) continue;
    const auto base = root / name;
    if (std::find(bases.begin(), bases.end(), base) == bases.end()) bases.push_back(base);
  }
  std::optional<QuotaCores> best;
  for (const auto& base : bases) {
    if (!exists_quietly(base)) continue;
    for (const auto& dir : hierarchy_chain(base, rel)) {
      const auto quota_file = dir / "cpu.cfs_quota_us";
      const auto period_file = dir / "cpu.cfs_period_us";
      if (!exists_quietly(quota_file) || !exists_quietly(period_file)) continue;
      auto quota = read_file(quota_file);
      auto period = read_file(period_file);
      if (!quota || !period) {
        warnings.push_back("cannot read cfs files in " + dir.string());
        continue;
      }
      try {
        keep_tightest(best, parse_cgroup_v1_files(*quota, *period));
      } catch (const ParseError& e) {
        warnings.push_back(dir.string() + ": " + e.what());
      }
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(QuotaSource source) {
  switch (source) {
    case QuotaSource::affinity: return "affinity";
    case QuotaSource::cgroup_v1: return "cgroup_v1";
    case QuotaSource::cgroup_v2: return "cgroup_v2";
    case QuotaSource::env_override: return "env_override";
    case QuotaSource::unlimited: return "unlimited";
  }
  return "unknown";
}

int cpu_mask_count(const cpu_set_t& mask) { return CPU_COUNT(&mask); }

int affinity_cpu_count(std::vector<std::string>* warnings) {
  cpu_set_t mask;
  CPU_ZERO(&mask);
  if (sched_getaffinity(0, sizeof(mask), &mask) == 0) {
    if (const int n = cpu_mask_count(mask); n > 0) return n;
  }
  if (warnings) warnings->push_back(std::string("sched_getaffinity failed: ") + std::strerror(errno));
  if (const long online = sysconf(_SC_NPROCESSORS_ONLN); online > 0) {
    return static_cast<int>(online);
  }
  if (warnings) warnings->push_back("online CPU count unavailable, assuming 1");
  return 1;
}

std::optional<QuotaCores> parse_cgroup_v2_cpu_max(std::string_view text) {
  const auto tokens = split_ws(text);
  if (tokens.size() != 2) {
    throw ParseError("cpu.max must hold two fields", std::string(text));
  }
  const auto period = to_int(tokens[1]);
  if (!period || *period <= 0) {
    throw ParseError("cpu.max period must be a positive integer", std::string(text));
  }
  if (tokens[0] == "max") return std::nullopt;
  const auto quota = to_int(tokens[0]);
  if (!quota || *quota <= 0) {
    throw ParseError("cpu.max quota must be 'max' or a positive integer", std::string(text));
  }
  return QuotaCores{Rational(*quota, *period), QuotaSource::cgroup_v2};
}

std::optional<QuotaCores> parse_cgroup_v1_quota(std::int64_t quota_us, std::int64_t period_us) {
  const auto text = std::to_string(quota_us) + " " + std::to_string(period_us);
  if (period_us <= 0) throw ParseError("cfs period must be positive", text);
  if (quota_us < -1 || quota_us == 0) throw ParseError("cfs quota must be -1 or positive", text);
  if (quota_us == -1) return std::nullopt;
  return QuotaCores{Rational(quota_us, period_us), QuotaSource::cgroup_v1};
}

std::optional<QuotaCores> parse_cgroup_v1_files(std::string_view quota_text,
                                                std::string_view period_text) {
  const auto quota = to_int(trim(quota_text));
  const auto period = to_int(trim(period_text));
  if (!quota) throw ParseError("cfs quota is not an integer", std::string(quota_text));
  if (!period) throw ParseError("cfs period is not an integer", std::string(period_text));
  return parse_cgroup_v1_quota(*quota, *period);
}

CgroupMembership parse_cgroup_membership(std::string_view text) {
  CgroupMembership out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find(':');
    if (first == std::string::npos) continue;
    const auto second = line.find(':', first + 1);
    if (second == std::string::npos) continue;
    const std::string id = line.substr(0, first);
    const std::string controllers = line.substr(first + 1, second - first - 1);
    const std::string path = line.substr(second + 1);
    if (id == "0" && controllers.empty()) {
      out.unified_path = path;
      continue;
    }
    std::istringstream names(controllers);
    std::string name;
    while (std::getline(names, name, ',')) {
      if (name == "cpu") {
        out.cpu_path = path;
        out.cpu_controllers = controllers;
      }
    }
  }
  return out;
}

std::optional<int> parse_cpu_override(const char* text) {
  if (text == nullptr) return std::nullopt;
  const auto value = to_int(trim(text));
  if (!value || *value <= 0 || *value > 1'000'000) return std::nullopt;
  return static_cast<int>(*value);
}

CpuBudget effective_cpus(const DetectOptions& options) {
  CpuBudget budget;
  budget.affinity_cpus = options.affinity_cpus.value_or(0);
  if (budget.affinity_cpus <= 0) budget.affinity_cpus = affinity_cpu_count(&budget.warnings);
  budget.effective_cpus = budget.affinity_cpus;

  if (options.env_override) {
    budget.effective_cpus = *options.env_override;
    budget.quota = QuotaCores{Rational(*options.env_override), QuotaSource::env_override};
    return budget;
  }

  if (!exists_quietly(options.cgroup_root)) {
    budget.warnings.push_back("cgroup root " + options.cgroup_root.string() +
                              " not found, using affinity only");
    return budget;
  }

  std::string v2_path = "/";
  std::string v1_path = "/";
  std::string controllers;
  if (options.cgroup_path) {
    v2_path = v1_path = *options.cgroup_path;
  } else if (auto text = read_file(options.membership_file)) {
    const auto membership = parse_cgroup_membership(*text);
    v2_path = membership.unified_path.value_or("/");
    v1_path = membership.cpu_path.value_or("/");
    controllers = membership.cpu_controllers;
  } else {
    budget.warnings.push_back("cannot read " + options.membership_file.string() +
                              ", checking the cgroup root only");
  }

  auto quota = detect_v2(options.cgroup_root, v2_path, budget.warnings);
  if (!quota) quota = detect_v1(options.cgroup_root, v1_path, controllers, budget.warnings);
  if (quota) {
    budget.quota = quota;
    const auto cores = std::max<std::int64_t>(1, quota->value.ceil());
    budget.effective_cpus = static_cast<int>(std::min<std::int64_t>(budget.affinity_cpus, cores));
  }
  return budget;
}

CpuBudget detect_cpu_budget() {
  DetectOptions options;
  const char* raw = std::getenv(kCpuOverrideEnv);
  options.env_override = parse_cpu_override(raw);
  CpuBudget budget = effective_cpus(options);
  if (raw != nullptr && !options.env_override) {
    budget.warnings.push_back(std::string(kCpuOverrideEnv) + "='" + raw + "' ignored, expected a positive integer");
  }
  return budget;
}

}  // namespace friendlypool
