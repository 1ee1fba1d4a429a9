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

#include <sys/utsname.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "friendlypool/cpu_detect.h"
#include "friendlypool/cpu_times.h"
#include "friendlypool/error.h"
#include "friendlypool/workload.h"

namespace friendlypool {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kMinOverlap = 0.9;
constexpr std::int64_t kQuotaPeriodUs = 100000;

std::string wall_time_iso() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string os_release_name() {
  std::ifstream in("/etc/os-release");
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with("PRETTY_NAME=")) {
      std::string v = line.substr(12);
      if (v.size() >= 2 && v.front() == '"') v = v.substr(1, v.size() - 2);
      return v;
    }
  }
  return {};
}

void log_line(const HarnessOptions& options, const std::string& text) {
  if (options.log) *options.log << text << std::endl;
}

std::string format_number(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return s;
}

// Cgroup the experiment processes join, validated up front.
class CgroupTarget {
 public:
  explicit CgroupTarget(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    if (!fs::is_directory(dir_, ec)) {
      throw std::runtime_error("cgroup directory " + dir_.string() +
                               " does not exist; create it first, e.g. `sudo mkdir " + dir_.string() +
                               " && sudo chown -R $USER " + dir_.string() + "`");
    }
    v2_ = fs::exists(dir_ / "cpu.max", ec);
    if (!v2_ && !fs::exists(dir_ / "cpu.cfs_quota_us", ec)) {
      throw std::runtime_error("cgroup " + dir_.string() +
                               " has no cpu controller files (cpu.max or cpu.cfs_quota_us); enable the "
                               "cpu controller in the parent's cgroup.subtree_control");
    }
  }

  void set_quota(const Rational& cores) const {
    const Rational quota = cores * Rational(kQuotaPeriodUs);
    const auto quota_us = std::max<std::int64_t>(quota.ceil(), 1000);
    if (v2_) {
      write(dir_ / "cpu.max", std::to_string(quota_us) + " " + std::to_string(kQuotaPeriodUs));
    } else {
      write(dir_ / "cpu.cfs_period_us", std::to_string(kQuotaPeriodUs));
      write(dir_ / "cpu.cfs_quota_us", std::to_string(quota_us));
    }
  }

  void add(pid_t pid) const { write(dir_ / "cgroup.procs", std::to_string(pid)); }

 private:
  static void write(const fs::path& file, const std::string& value) {
    std::ofstream out(file);
    out << value << std::flush;
    if (!out) {
      throw std::runtime_error("cannot write '" + value + "' to " + file.string() +
                               "; grant write access, e.g. `sudo chown -R $USER " +
                               file.parent_path().string() + "`");
    }
  }

  fs::path dir_;
  bool v2_ = false;
};

struct RepeatFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::size_t resolve_cpus(const ExperimentConfig& config) {
  return config.cpus != 0 ? config.cpus : static_cast<std::size_t>(affinity_cpu_count());
}

RepeatRecord run_repeat_once(const ExperimentConfig& config, const HarnessOptions& options,
                             const fs::path& dir, int repeat) {
  const std::size_t processes = config.neighbours + 1;
  const std::size_t cpus = resolve_cpus(config);
  std::optional<CgroupTarget> cgroup;
  if (config.cgroup_path) {
    cgroup.emplace(*config.cgroup_path);
    if (config.quota_cores) cgroup->set_quota(*config.quota_cores);
  }

  RepeatRecord record;
  record.index = repeat;
  std::vector<std::string> samples(processes), traces(processes);
  for (std::size_t i = 0; i < processes; ++i) {
    const std::string stem = "r" + std::to_string(repeat) + "_p" + std::to_string(i);
    samples[i] = stem + "_samples.csv";
    traces[i] = stem + "_trace.csv";
  }

  ProcessGroup group = spawn_neighbours(
      config.neighbours,
      [&](std::size_t i) {
        return worker_command(options, config, processes, cpus, dir / samples[i], dir / traces[i]);
      },
      options.ready_timeout);

  record.processes.resize(processes);
  for (std::size_t i = 0; i < processes; ++i) {
    auto& p = record.processes[i];
    p.index = i;
    p.pid = group[i].pid();
    p.samples_csv = samples[i];
    p.trace_csv = traces[i];
  }

  if (cgroup) {
    try {
      for (std::size_t i = 0; i < processes; ++i) cgroup->add(group[i].pid());
    } catch (...) {
      group.kill_all();
      throw;
    }
  }

  group.release();
  const auto wait_for = config.duration + options.finish_grace;
  std::string failure;
  for (std::size_t i = 0; i < processes; ++i) {
    auto line = group[i].read_line(std::chrono::duration_cast<std::chrono::milliseconds>(wait_for));
    const auto fields = line ? split(*line) : std::vector<std::string>{};
    if (fields.size() != 6 || fields[0] != "DONE") {
      failure = "process " + std::to_string(i) + " did not finish (got '" + line.value_or("<eof>") + "')";
      break;
    }
    auto& p = record.processes[i];
    p.run_start_ns = std::stoll(fields[1]);
    p.run_end_ns = std::stoll(fields[2]);
    p.emitted = std::stoull(fields[3]);
    p.completed = std::stoull(fields[4]);
    p.lag_events = std::stoull(fields[5]);
  }
  if (!failure.empty()) group.kill_all();
  for (std::size_t i = 0; i < processes; ++i) {
    record.processes[i].exit_code = group[i].wait();
    if (failure.empty() && record.processes[i].exit_code != 0) {
      failure = "process " + std::to_string(i) + " exited with status " +
                std::to_string(record.processes[i].exit_code);
    }
  }
  if (!failure.empty()) throw RepeatFailure(failure);

  std::int64_t latest_start = INT64_MIN, earliest_end = INT64_MAX;
  for (const auto& p : record.processes) {
    latest_start = std::max(latest_start, p.run_start_ns);
    earliest_end = std::min(earliest_end, p.run_end_ns);
  }
  const auto duration_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(config.duration).count();
  record.overlap = std::clamp(static_cast<double>(earliest_end - latest_start) / static_cast<double>(duration_ns), 0.0, 1.0);
  if (record.overlap < kMinOverlap) {
    throw RepeatFailure("processes overlapped for only " + format_number(record.overlap * 100) +
                        "% of the run");
  }
  record.ok = true;
  return record;
}

RepeatRecord run_repeat(const ExperimentConfig& config, const HarnessOptions& options,
                        const fs::path& dir, int repeat) {
  std::string first_error;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    try {
      RepeatRecord record = run_repeat_once(config, options, dir, repeat);
      record.attempts = attempt;
      if (!first_error.empty()) record.error = "retried after: " + first_error;
      return record;
    } catch (const RepeatFailure& e) {
      log_line(options, "repeat " + std::to_string(repeat) + " attempt " + std::to_string(attempt) +
                            " failed: " + e.what());
      if (attempt == 2) {
        throw std::runtime_error(experiment_id(config) + " repeat " + std::to_string(repeat) +
                                 " failed twice: " + first_error + "; then: " + e.what());
      }
      first_error = e.what();
    }
  }
  throw std::logic_error("unreachable");
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["family"] = to_string(c.family);
  j["strategy"] = c.strategy.to_string();
  j["neighbours"] = c.neighbours;
  j["repeats"] = c.repeats;
  j["duration_ms"] = c.duration.count();
  j["rate"] = c.rate;
  j["fib_n"] = c.fib_n;
  j["contention"] = c.contention;
  j["overcommit"] = c.overcommit.to_string();
  j["cgroup_path"] = c.cgroup_path ? json(c.cgroup_path->string()) : json(nullptr);
  j["quota_cores"] = c.quota_cores ? json(c.quota_cores->to_string()) : json(nullptr);
  j["cpus"] = c.cpus;
  j["poll_interval_ms"] = c.poll_interval.count();
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.family = parse_family(j.at("family").get<std::string>());
  c.strategy = Strategy::parse(j.at("strategy").get<std::string>());
  c.neighbours = j.at("neighbours").get<std::size_t>();
  c.repeats = j.at("repeats").get<int>();
  c.duration = std::chrono::milliseconds(j.at("duration_ms").get<std::int64_t>());
  c.rate = j.at("rate").get<double>();
  c.fib_n = j.at("fib_n").get<unsigned>();
  c.contention = j.at("contention").get<bool>();
  c.overcommit = Rational::parse(j.at("overcommit").get<std::string>());
  if (!j.at("cgroup_path").is_null()) c.cgroup_path = j["cgroup_path"].get<std::string>();
  if (!j.at("quota_cores").is_null()) c.quota_cores = Rational::parse(j["quota_cores"].get<std::string>());
  c.cpus = j.at("cpus").get<std::size_t>();
  c.poll_interval = std::chrono::milliseconds(j.at("poll_interval_ms").get<std::int64_t>());
  return c;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::thread_sweep: return "thread_sweep";
    case Family::quota_sweep: return "quota_sweep";
    case Family::neighbour_sweep: return "neighbour_sweep";
    case Family::overcommit_sweep: return "overcommit_sweep";
  }
  return "unknown";
}

Family parse_family(std::string_view text) {
  for (Family f : {Family::thread_sweep, Family::quota_sweep, Family::neighbour_sweep,
                   Family::overcommit_sweep}) {
    if (text == to_string(f)) return f;
  }
  throw ParseError("unknown experiment family", std::string(text));
}

Strategy Strategy::parse(std::string_view text) {
  if (text == "ignorant") return ignorant();
  if (text == "collaborative") return collaborative();
  if (text == "optimal") return optimal();
  std::string_view digits;
  if (text.starts_with("static(") && text.ends_with(")")) {
    digits = text.substr(7, text.size() - 8);
  } else if (text.starts_with("static:")) {
    digits = text.substr(7);
  } else {
    throw ParseError("unknown strategy", std::string(text));
  }
  std::size_t n = 0;
  for (char c : digits) {
    if (c < '0' || c > '9' || n > 1'000'000) throw ParseError("bad static thread count", std::string(text));
    n = n * 10 + static_cast<std::size_t>(c - '0');
  }
  if (digits.empty() || n == 0) throw ParseError("static thread count must be >= 1", std::string(text));
  return fixed(n);
}

std::string Strategy::to_string() const {
  switch (kind) {
    case Kind::ignorant: return "ignorant";
    case Kind::collaborative: return "collaborative";
    case Kind::optimal: return "optimal";
    case Kind::fixed: return "static(" + std::to_string(threads) + ")";
  }
  return "unknown";
}

ThreadCount strategy_thread_count(const Strategy& strategy, std::size_t cpus, std::size_t processes) {
  cpus = std::max<std::size_t>(cpus, 1);
  processes = std::max<std::size_t>(processes, 1);
  switch (strategy.kind) {
    case Strategy::Kind::ignorant: return {false, cpus};
    case Strategy::Kind::optimal: return {false, std::max<std::size_t>(1, cpus / processes)};
    case Strategy::Kind::fixed: return {false, strategy.threads};
    case Strategy::Kind::collaborative: return {true, cpus};
  }
  return {false, 1};
}

void validate(const ExperimentConfig& config) {
  if (config.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (config.duration.count() <= 0) throw std::invalid_argument("duration must be > 0");
  if (!(config.rate > 0.0)) throw std::invalid_argument("rate must be > 0");
  if (config.fib_n > kMaxFibN) throw std::invalid_argument("fib_n must be <= 40");
  if (config.overcommit <= Rational(0)) throw std::invalid_argument("overcommit factor must be > 0");
  if (config.family == Family::quota_sweep && !config.cgroup_path) {
    throw std::invalid_argument(
        "quota_sweep needs --cgroup <dir>: pre-create a cgroup with the cpu controller enabled and "
        "make it writable, e.g. `sudo mkdir /sys/fs/cgroup/friendly && sudo chown -R $USER "
        "/sys/fs/cgroup/friendly`");
  }
  if (config.quota_cores && *config.quota_cores <= Rational(0)) {
    throw std::invalid_argument("quota cores must be > 0");
  }
}

std::string experiment_id(const ExperimentConfig& c) {
  std::string id = std::string(to_string(c.family)) + "-" + c.strategy.to_string() + "-n" +
                   std::to_string(c.neighbours) + "-fib" + std::to_string(c.fib_n) + "-rate" +
                   format_number(c.rate);
  if (c.strategy.kind == Strategy::Kind::collaborative) id += "-O" + c.overcommit.to_string();
  if (c.contention) id += "-contended";
  if (c.quota_cores) id += "-quota" + c.quota_cores->to_string();
  if (c.cpus != 0) id += "-cpus" + std::to_string(c.cpus);
  return sanitize(id);
}

HostMetadata collect_host_metadata() {
  HostMetadata host;
  const auto budget = detect_cpu_budget();
  host.cpus = budget.effective_cpus;
  host.affinity_cpus = budget.affinity_cpus;
  host.clock_ticks_per_second = clock_ticks_per_second();
  host.os_release = os_release_name();
  utsname uts{};
  if (::uname(&uts) == 0) {
    host.kernel = std::string(uts.sysname) + " " + uts.release;
    host.hostname = uts.nodename;
  }
  return host;
}

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["experiment_id"] = m.experiment_id;
  j["config"] = config_to_json(m.config);
  j["host"] = {{"cpus", m.host.cpus},
               {"affinity_cpus", m.host.affinity_cpus},
               {"clock_ticks_per_second", m.host.clock_ticks_per_second},
               {"os_release", m.host.os_release},
               {"kernel", m.host.kernel},
               {"hostname", m.host.hostname}};
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["warnings"] = m.warnings;
  j["repeats"] = json::array();
  for (const auto& r : m.repeats) {
    json jr{{"index", r.index}, {"attempts", r.attempts}, {"ok", r.ok},
            {"overlap", r.overlap}, {"error", r.error}};
    jr["processes"] = json::array();
    for (const auto& p : r.processes) {
      jr["processes"].push_back({{"index", p.index},
                                 {"pid", p.pid},
                                 {"threads", p.threads},
                                 {"dynamic", p.dynamic},
                                 {"samples_csv", p.samples_csv},
                                 {"trace_csv", p.trace_csv},
                                 {"run_start_ns", p.run_start_ns},
                                 {"run_end_ns", p.run_end_ns},
                                 {"emitted", p.emitted},
                                 {"completed", p.completed},
                                 {"lag_events", p.lag_events},
                                 {"exit_code", p.exit_code}});
    }
    j["repeats"].push_back(std::move(jr));
  }
  return j.dump(2);
}

RunManifest manifest_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    RunManifest m;
    m.experiment_id = j.at("experiment_id").get<std::string>();
    m.config = config_from_json(j.at("config"));
    const auto& h = j.at("host");
    m.host.cpus = h.at("cpus").get<int>();
    m.host.affinity_cpus = h.at("affinity_cpus").get<int>();
    m.host.clock_ticks_per_second = h.at("clock_ticks_per_second").get<long>();
    m.host.os_release = h.at("os_release").get<std::string>();
    m.host.kernel = h.at("kernel").get<std::string>();
    m.host.hostname = h.at("hostname").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& jr : j.at("repeats")) {
      RepeatRecord r;
      r.index = jr.at("index").get<int>();
      r.attempts = jr.at("attempts").get<int>();
      r.ok = jr.at("ok").get<bool>();
      r.overlap = jr.at("overlap").get<double>();
      r.error = jr.at("error").get<std::string>();
      for (const auto& jp : jr.at("processes")) {
        ProcessRecord p;
        p.index = jp.at("index").get<std::size_t>();
        p.pid = jp.at("pid").get<pid_t>();
        p.threads = jp.at("threads").get<std::size_t>();
        p.dynamic = jp.at("dynamic").get<bool>();
        p.samples_csv = jp.at("samples_csv").get<std::string>();
        p.trace_csv = jp.at("trace_csv").get<std::string>();
        p.run_start_ns = jp.at("run_start_ns").get<std::int64_t>();
        p.run_end_ns = jp.at("run_end_ns").get<std::int64_t>();
        p.emitted = jp.at("emitted").get<std::uint64_t>();
        p.completed = jp.at("completed").get<std::uint64_t>();
        p.lag_events = jp.at("lag_events").get<std::uint64_t>();
        p.exit_code = jp.at("exit_code").get<int>();
        r.processes.push_back(std::move(p));
      }
      m.repeats.push_back(std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid manifest: ") + e.what(), std::string(text.substr(0, 200)));
  }
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  std::ofstream out(path);
  out << manifest_to_json(manifest) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
}

RunManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str());
}

std::vector<std::string> worker_command(const HarnessOptions& options, const ExperimentConfig& config,
                                        std::size_t processes, std::size_t cpus,
                                        const fs::path& samples_csv, const fs::path& trace_csv) {
  std::vector<std::string> argv{options.worker_executable.string(),
                                "worker",
                                "--strategy", config.strategy.to_string(),
                                "--processes", std::to_string(processes),
                                "--cpus", std::to_string(cpus),
                                "--rate", format_number(config.rate),
                                "--duration-ms", std::to_string(config.duration.count()),
                                "--fib-n", std::to_string(config.fib_n),
                                "--overcommit", config.overcommit.to_string(),
                                "--poll-ms", std::to_string(config.poll_interval.count()),
                                "--samples", samples_csv.string(),
                                "--trace", trace_csv.string()};
  if (config.contention) argv.emplace_back("--contention");
  return argv;
}

void ProcessGroup::release() {
  for (auto& child : children_) child.write_line("GO");
}

void ProcessGroup::kill_all() noexcept {
  for (auto& child : children_) child.kill();
}

ProcessGroup spawn_neighbours(std::size_t neighbours,
                              const std::function<std::vector<std::string>(std::size_t)>& command,
                              std::chrono::milliseconds ready_timeout) {
  std::vector<ChildProcess> children;
  children.reserve(neighbours + 1);
  // ChildProcess destructors kill and reap anything started if we throw.
  for (std::size_t i = 0; i <= neighbours; ++i) {
    children.push_back(ChildProcess::spawn(command(i)));
  }
  for (std::size_t i = 0; i < children.size(); ++i) {
    const auto line = children[i].read_line(ready_timeout);
    if (!line || !line->starts_with("READY")) {
      throw RepeatFailure("process " + std::to_string(i) + " did not report ready (got '" +
                          line.value_or("<eof/timeout>") + "')");
    }
  }
  return ProcessGroup(std::move(children));
}

RunManifest run_experiment(const ExperimentConfig& config, const HarnessOptions& options) {
  const ExperimentConfig configs[] = {config};
  return run_experiments(configs, options).front();
}

std::vector<RunManifest> run_experiments(std::span<const ExperimentConfig> configs,
                                         const HarnessOptions& options) {
  const HostMetadata host = collect_host_metadata();
  std::vector<RunManifest> manifests;
  std::vector<fs::path> dirs;
  int max_repeats = 0;
  for (const auto& config : configs) {
    validate(config);
    RunManifest m;
    m.experiment_id = experiment_id(config);
    m.config = config;
    m.host = host;
    m.started_at = wall_time_iso();
    if (host.affinity_cpus < 2) {
      m.warnings.push_back("host has " + std::to_string(host.affinity_cpus) +
                           " CPU; multi-CPU effects cannot be observed");
    }
    fs::path dir = options.out_dir / m.experiment_id;
    fs::create_directories(dir);
    dirs.push_back(dir);
    manifests.push_back(std::move(m));
    max_repeats = std::max(max_repeats, config.repeats);
  }

  for (int repeat = 0; repeat < max_repeats; ++repeat) {
    for (std::size_t c = 0; c < configs.size(); ++c) {
      if (repeat >= configs[c].repeats) continue;
      log_line(options, manifests[c].experiment_id + " repeat " + std::to_string(repeat + 1) + "/" +
                            std::to_string(configs[c].repeats));
      try {
        RepeatRecord record = run_repeat(configs[c], options, dirs[c], repeat);
        const std::size_t cpus = resolve_cpus(configs[c]);
        const ThreadCount tc = strategy_thread_count(configs[c].strategy, cpus, configs[c].neighbours + 1);
        for (auto& p : record.processes) {
          p.threads = tc.threads;
          p.dynamic = tc.dynamic;
        }
        manifests[c].repeats.push_back(std::move(record));
      } catch (...) {
        manifests[c].finished_at = wall_time_iso();
        manifests[c].warnings.push_back("aborted during repeat " + std::to_string(repeat));
        write_manifest(dirs[c] / kManifestFile, manifests[c]);
        throw;
      }
    }
  }
  for (std::size_t c = 0; c < configs.size(); ++c) {
    manifests[c].finished_at = wall_time_iso();
    write_manifest(dirs[c] / kManifestFile, manifests[c]);
  }
  return manifests;
}

}  // namespace friendlypool
