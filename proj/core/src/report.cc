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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "friendlypool/error.h"

namespace friendlypool {
namespace fs = std::filesystem;
namespace {

constexpr double kMaxMalformedFraction = 0.01;

bool parse_i64(std::string_view s, std::int64_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string ratio_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double safe_ratio(double num, double den) {
  if (num == den) return 1.0;
  if (den == 0) return INFINITY;
  return num / den;
}

std::string threads_label(const ExperimentConfig& config, const HostMetadata& host) {
  const std::size_t cpus = config.cpus != 0 ? config.cpus : static_cast<std::size_t>(std::max(host.affinity_cpus, 1));
  const auto tc = strategy_thread_count(config.strategy, cpus, config.neighbours + 1);
  return tc.dynamic ? "dynamic" : std::to_string(tc.threads);
}

// Everything but strategy and overcommit factor.
std::string axis_key(const ExperimentConfig& c) {
  std::ostringstream ss;
  ss << to_string(c.family) << " neighbours=" << c.neighbours << " fib_n=" << c.fib_n
     << " rate=" << c.rate << " contention=" << (c.contention ? 1 : 0);
  if (c.quota_cores) ss << " quota=" << c.quota_cores->to_string();
  if (c.cpus) ss << " cpus=" << c.cpus;
  return ss.str();
}

}  // namespace

std::int64_t percentile(std::span<const std::int64_t> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty sample set");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("percentile fraction outside [0, 1]");
  if (q == 0.0) return sorted.front();
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double throughput(std::size_t completed, double duration_seconds) {
  if (!(duration_seconds > 0)) throw std::invalid_argument("duration must be > 0");
  return static_cast<double>(completed) / duration_seconds;
}

LatencySummary summarize_latencies(std::vector<std::int64_t> values) {
  LatencySummary out;
  out.count = values.size();
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  out.p50 = percentile(values, 0.50);
  out.p90 = percentile(values, 0.90);
  out.p99 = percentile(values, 0.99);
  out.max = values.back();
  return out;
}

SampleTable parse_samples_csv(std::istream& in) {
  SampleTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  if (line != "id,queue_start_ns,fib_start_ns,end_ns") {
    throw ParseError("unexpected samples header", line);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++table.rows;
    const auto f = split_commas(line);
    std::int64_t v[4];
    bool ok = f.size() == 4;
    for (std::size_t i = 0; ok && i < 4; ++i) ok = parse_i64(f[i], v[i]);
    ok = ok && v[0] >= 0 && v[1] <= v[2] && v[2] <= v[3];
    if (!ok) {
      ++table.malformed;
      continue;
    }
    WorkItem item;
    item.id = static_cast<std::uint64_t>(v[0]);
    item.queue_start_ns = v[1];
    item.fib_start_ns = v[2];
    item.end_ns = v[3];
    table.items.push_back(item);
  }
  return table;
}

SampleTable read_samples_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SummaryError("cannot open " + path.string());
  return parse_samples_csv(in);
}

std::vector<TracePoint> parse_trace_csv(std::istream& in) {
  std::vector<TracePoint> out;
  std::string line;
  if (!std::getline(in, line)) return out;
  if (line != "timestamp_ns,active_count") throw ParseError("unexpected trace header", line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_commas(line);
    std::int64_t ts = 0, active = 0;
    if (f.size() != 2 || !parse_i64(f[0], ts) || !parse_i64(f[1], active) || active < 0) {
      throw ParseError("bad trace row", line);
    }
    out.push_back({ts, static_cast<std::size_t>(active)});
  }
  return out;
}

std::vector<TracePoint> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SummaryError("cannot open " + path.string());
  return parse_trace_csv(in);
}

double fraction_near(std::span<const TracePoint> trace, std::int64_t from_ns, std::size_t target,
                     std::size_t tolerance) {
  std::size_t total = 0, near = 0;
  for (const auto& p : trace) {
    if (p.timestamp_ns < from_ns) continue;
    ++total;
    const std::size_t diff = p.active_count > target ? p.active_count - target : target - p.active_count;
    if (diff <= tolerance) ++near;
  }
  return total == 0 ? 0.0 : static_cast<double>(near) / static_cast<double>(total);
}

ConfigSummary summarize_manifest(const RunManifest& manifest, const fs::path& dir,
                                 std::vector<SummaryRow>* rows) {
  ConfigSummary summary;
  summary.manifest = manifest;
  const auto& config = manifest.config;
  const double seconds = std::chrono::duration<double>(config.duration).count();
  const std::string threads = threads_label(config, manifest.host);

  std::vector<double> fib_p99, fib_max, queue_p99, tput;
  for (const auto& repeat : manifest.repeats) {
    if (!repeat.ok) continue;
    RepeatAggregate agg;
    agg.repeat = repeat.index;
    std::vector<std::int64_t> pooled_queue, pooled_fib;
    for (const auto& proc : repeat.processes) {
      const SampleTable samples = read_samples_csv(dir / proc.samples_csv);
      summary.rows += samples.rows;
      summary.malformed += samples.malformed;
      std::vector<std::int64_t> queue, fib;
      queue.reserve(samples.items.size());
      fib.reserve(samples.items.size());
      for (const auto& item : samples.items) {
        const auto lat = latency_of(item);
        queue.push_back(lat.queue_latency_ns);
        fib.push_back(lat.fib_latency_ns);
      }
      pooled_queue.insert(pooled_queue.end(), queue.begin(), queue.end());
      pooled_fib.insert(pooled_fib.end(), fib.begin(), fib.end());
      const double proc_tput = throughput(samples.items.size(), seconds);
      agg.throughput += proc_tput;
      if (rows) {
        SummaryRow row;
        row.experiment_id = manifest.experiment_id;
        row.strategy = config.strategy.to_string();
        row.neighbours = config.neighbours;
        row.threads = threads;
        row.overcommit = config.overcommit.to_string();
        row.throughput = proc_tput;
        row.repeat = repeat.index;
        row.process = proc.index;
        row.metric = "queue_latency";
        row.latency = summarize_latencies(std::move(queue));
        rows->push_back(row);
        row.metric = "fib_latency";
        row.latency = summarize_latencies(std::move(fib));
        rows->push_back(row);
      }
      std::error_code ec;
      if (fs::exists(dir / proc.trace_csv, ec)) {
        agg.traces.push_back(read_trace_csv(dir / proc.trace_csv));
      } else {
        agg.traces.emplace_back();
      }
    }
    agg.queue_latency = summarize_latencies(std::move(pooled_queue));
    agg.fib_latency = summarize_latencies(std::move(pooled_fib));
    fib_p99.push_back(static_cast<double>(agg.fib_latency.p99));
    fib_max.push_back(static_cast<double>(agg.fib_latency.max));
    queue_p99.push_back(static_cast<double>(agg.queue_latency.p99));
    tput.push_back(agg.throughput);
    summary.repeats.push_back(std::move(agg));
  }

  if (summary.rows > 0 &&
      static_cast<double>(summary.malformed) > kMaxMalformedFraction * static_cast<double>(summary.rows)) {
    throw SummaryError(manifest.experiment_id + ": " + std::to_string(summary.malformed) + " of " +
                       std::to_string(summary.rows) + " sample rows are malformed");
  }
  if (!summary.repeats.empty()) {
    summary.median_fib_p99 = median(fib_p99);
    summary.median_fib_max = median(fib_max);
    summary.median_queue_p99 = median(queue_p99);
    summary.median_throughput = median(tput);
  }
  return summary;
}

SummaryTable summarize(std::span<const LoadedManifest> manifests) {
  SummaryTable table;
  for (const auto& m : manifests) {
    table.configs.push_back(summarize_manifest(m.manifest, m.dir, &table.rows));
  }
  std::map<std::string, std::vector<const ConfigSummary*>> groups;
  for (const auto& c : table.configs) groups[axis_key(c.manifest.config)].push_back(&c);
  for (const auto& [axis, members] : groups) {
    for (const auto* ign : members) {
      if (ign->manifest.config.strategy.kind != Strategy::Kind::ignorant) continue;
      for (const auto* col : members) {
        if (col->manifest.config.strategy.kind != Strategy::Kind::collaborative) continue;
        RatioRow r;
        r.axis = axis;
        r.ignorant_id = ign->manifest.experiment_id;
        r.collaborative_id = col->manifest.experiment_id;
        r.max_fib_latency_ratio = safe_ratio(ign->median_fib_max, col->median_fib_max);
        r.throughput_ratio = safe_ratio(ign->median_throughput, col->median_throughput);
        table.ratios.push_back(std::move(r));
      }
    }
  }
  return table;
}

SummaryTable summarize_directory(const fs::path& dir) {
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == kManifestFile) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<LoadedManifest> loaded;
  for (const auto& p : paths) loaded.push_back({read_manifest(p), p.parent_path()});
  return summarize(loaded);
}

void write_summary_csv(std::ostream& out, const SummaryTable& table) {
  out << "strategy,neighbours,threads,O,metric,p50,p90,p99,max,throughput,repeat,process\n";
  for (const auto& r : table.rows) {
    out << r.strategy << ',' << r.neighbours << ',' << r.threads << ',' << r.overcommit << ','
        << r.metric << ',' << r.latency.p50 << ',' << r.latency.p90 << ',' << r.latency.p99 << ','
        << r.latency.max << ',' << fixed3(r.throughput) << ',' << r.repeat << ',' << r.process << '\n';
  }
}

void write_ratio_csv(std::ostream& out, const SummaryTable& table) {
  out << "axis,ignorant,collaborative,max_fib_latency_ratio,throughput_ratio\n";
  for (const auto& r : table.ratios) {
    out << '"' << r.axis << "\"," << r.ignorant_id << ',' << r.collaborative_id << ','
        << ratio_text(r.max_fib_latency_ratio) << ',' << ratio_text(r.throughput_ratio) << '\n';
  }
}

double sweep_value(const ExperimentConfig& c) {
  switch (c.family) {
    case Family::thread_sweep:
      return c.strategy.kind == Strategy::Kind::fixed ? static_cast<double>(c.strategy.threads)
                                                      : static_cast<double>(c.cpus);
    case Family::quota_sweep:
      return c.quota_cores ? c.quota_cores->to_double() : 0.0;
    case Family::neighbour_sweep:
      return static_cast<double>(c.neighbours);
    case Family::overcommit_sweep:
      return c.overcommit.to_double();
  }
  return 0;
}

std::vector<fs::path> write_report_plots(const SummaryTable& table, const fs::path& dir) {
  if (table.configs.empty()) return {};
  const Family family = table.configs.front().manifest.config.family;
  const char* x_label = family == Family::thread_sweep      ? "threads"
                        : family == Family::quota_sweep     ? "quota cores"
                        : family == Family::neighbour_sweep ? "neighbours"
                                                            : "overcommit factor O";

  // Series keyed by what is *not* on the x axis.
  std::map<std::string, PlotSeries> fib, queue, tput;
  for (const auto& c : table.configs) {
    const auto& cfg = c.manifest.config;
    std::string name = cfg.strategy.to_string();
    if (family == Family::thread_sweep) name = cfg.contention ? "contended" : "uncontended";
    const double x = sweep_value(cfg);
    for (const auto& r : c.repeats) {
      fib[name].name = name;
      queue[name].name = name;
      tput[name].name = name;
      fib[name].points.push_back({x, static_cast<double>(r.fib_latency.p99) / 1e6});
      queue[name].points.push_back({x, static_cast<double>(r.queue_latency.p99) / 1e6});
      tput[name].points.push_back({x, r.throughput});
    }
  }
  auto values = [](std::map<std::string, PlotSeries>& m) {
    std::vector<PlotSeries> out;
    for (auto& [k, v] : m) out.push_back(std::move(v));
    return out;
  };

  std::vector<fs::path> written;
  auto emit = [&](const char* file, std::vector<PlotSeries> series, AxisSpec axes) {
    const fs::path path = dir / file;
    std::ofstream out(path);
    emit_plot(out, series, axes);
    if (!out) throw SummaryError("cannot write " + path.string());
    written.push_back(path);
  };
  emit("fib_latency.svg", values(fib), {"p99 fib latency per repeat", x_label, "ms", PlotKind::scatter, true});
  emit("queue_latency.svg", values(queue),
       {"p99 queue latency per repeat", x_label, "ms", PlotKind::scatter, true});
  emit("throughput.svg", values(tput),
       {"throughput (median, min-max)", x_label, "items/s", PlotKind::median_range, false});
  return written;
}

}  // namespace friendlypool
