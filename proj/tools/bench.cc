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

// bench: experiment runner and reporting CLI for friendlypool.
//
//   bench nproc
//   bench calibrate
//   bench run --family neighbour_sweep --strategy ignorant,collaborative --neighbours 0-3 ...
//   bench report <dir> [--plot]
//   bench worker ...            (spawned by `bench run`)

#include <unistd.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "friendlypool/cpu_detect.h"
#include "friendlypool/harness.h"
#include "friendlypool/report.h"
#include "friendlypool/worker.h"
#include "friendlypool/workload.h"

namespace fs = std::filesystem;
using namespace friendlypool;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// "0-3,5" -> {0,1,2,3,5}
std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& part : split_list(text)) {
    if (auto dash = part.find('-'); dash != std::string::npos && dash > 0) {
      const auto lo = std::stoul(part.substr(0, dash));
      const auto hi = std::stoul(part.substr(dash + 1));
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(std::stoul(part));
    }
  }
  return out;
}

fs::path self_executable(const char* argv0) {
  std::error_code ec;
  auto p = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::absolute(argv0) : p;
}

struct RunArgs {
  std::string family = "neighbour_sweep";
  std::string strategies = "collaborative";
  std::string neighbours = "0";
  std::string threads;
  std::string rate = "100";
  double duration_s = 5;
  int repeats = 5;
  std::string fib_n = "30";
  bool contention = false;
  std::string overcommit = "1";
  std::string cgroup;
  std::string quota;
  std::size_t cpus = 0;
  int poll_ms = 10;
  std::string out;
};

int cmd_run(const RunArgs& a, const char* argv0) {
  ExperimentConfig base;
  base.family = parse_family(a.family);
  base.duration = std::chrono::milliseconds(static_cast<std::int64_t>(a.duration_s * 1000));
  base.repeats = a.repeats;
  base.contention = a.contention;
  base.cpus = a.cpus;
  base.poll_interval = std::chrono::milliseconds(a.poll_ms);
  if (!a.cgroup.empty()) base.cgroup_path = a.cgroup;

  const std::size_t cpus = a.cpus ? a.cpus : static_cast<std::size_t>(affinity_cpu_count());
  if (a.fib_n == "auto") {
    const auto cal = calibrate();
    base.fib_n = cal.fib_n;
    std::cerr << "calibrated fib_n=" << cal.fib_n << " (" << cal.item_time.count() / 1e6 << " ms)\n";
  } else {
    base.fib_n = static_cast<unsigned>(std::stoul(a.fib_n));
  }
  if (!a.rate.empty() && a.rate.back() == 'x') {
    const double factor = std::stod(a.rate.substr(0, a.rate.size() - 1));
    const auto item = measure_fib(base.fib_n);
    base.rate = factor * (1e9 / static_cast<double>(item.count())) * static_cast<double>(cpus);
    std::cerr << "rate=" << base.rate << " items/s (" << factor << "x capacity of " << cpus << " CPUs)\n";
  } else {
    base.rate = std::stod(a.rate);
  }

  std::vector<Strategy> strategies;
  for (const auto& s : split_list(a.strategies)) strategies.push_back(Strategy::parse(s));
  if (!a.threads.empty()) {
    strategies.clear();
    for (auto n : parse_index_list(a.threads)) strategies.push_back(Strategy::fixed(n));
  }
  std::vector<Rational> factors;
  for (const auto& s : split_list(a.overcommit)) factors.push_back(Rational::parse(s));
  std::vector<std::optional<Rational>> quotas{std::nullopt};
  if (!a.quota.empty()) {
    quotas.clear();
    for (const auto& s : split_list(a.quota)) quotas.emplace_back(Rational::parse(s));
  }

  std::vector<ExperimentConfig> configs;
  for (auto n : parse_index_list(a.neighbours)) {
    for (const auto& q : quotas) {
      for (const auto& s : strategies) {
        for (const auto& o : factors) {
          if (s.kind != Strategy::Kind::collaborative && &o != &factors.front()) continue;
          ExperimentConfig c = base;
          c.neighbours = n;
          c.strategy = s;
          c.overcommit = o;
          c.quota_cores = q;
          configs.push_back(c);
        }
      }
    }
  }

  HarnessOptions options;
  options.worker_executable = self_executable(argv0);
  options.out_dir = a.out;
  options.log = &std::cerr;
  fs::create_directories(options.out_dir);
  const auto manifests = run_experiments(configs, options);
  for (const auto& m : manifests) {
    std::cout << (fs::path(a.out) / m.experiment_id / kManifestFile).string() << '\n';
  }
  return 0;
}

int cmd_report(const std::string& dir, bool plot) {
  const SummaryTable table = summarize_directory(dir);
  {
    std::ofstream out(fs::path(dir) / "summary.csv");
    write_summary_csv(out, table);
  }
  {
    std::ofstream out(fs::path(dir) / "ratios.csv");
    write_ratio_csv(out, table);
  }
  std::cout << std::left << std::setw(64) << "experiment" << std::right << std::setw(12) << "fib p99 ms"
            << std::setw(12) << "fib max ms" << std::setw(14) << "items/s" << '\n';
  for (const auto& c : table.configs) {
    std::cout << std::left << std::setw(64) << c.manifest.experiment_id << std::right << std::fixed
              << std::setprecision(2) << std::setw(12) << c.median_fib_p99 / 1e6 << std::setw(12)
              << c.median_fib_max / 1e6 << std::setw(14) << c.median_throughput << '\n';
  }
  for (const auto& r : table.ratios) {
    std::cout << "ratio [" << r.axis << "] max fib latency " << r.max_fib_latency_ratio
              << "x, throughput " << r.throughput_ratio << "x\n";
  }
  if (plot) {
    for (const auto& p : write_report_plots(table, dir)) std::cout << "wrote " << p.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"friendlypool benchmark harness"};
  app.require_subcommand(1);

  auto* nproc = app.add_subcommand("nproc", "Print the number of CPUs this process should use");
  bool nproc_verbose = false;
  nproc->add_flag("-v,--verbose", nproc_verbose, "Explain the budget on stderr");

  app.add_subcommand("calibrate", "Pick fib_n so one item takes 5-20 ms on this host");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run an experiment family");
  run->add_option("--family", run_args.family, "thread_sweep|quota_sweep|neighbour_sweep|overcommit_sweep");
  run->add_option("--strategy", run_args.strategies,
                  "Comma list of ignorant, collaborative, optimal, static(N)");
  run->add_option("--neighbours", run_args.neighbours, "Neighbour counts, e.g. 3 or 0-7");
  run->add_option("--threads", run_args.threads, "Static thread counts, e.g. 1,2,4 (replaces --strategy)");
  run->add_option("--rate", run_args.rate, "Items/s per process, or e.g. 1.2x for 1.2x measured capacity");
  run->add_option("--duration", run_args.duration_s, "Seconds per repeat");
  run->add_option("--repeats", run_args.repeats, "Repeats per configuration");
  run->add_option("--fib-n", run_args.fib_n, "fib argument per item, or 'auto'");
  run->add_flag("--contention", run_args.contention, "Serialise fib(30) frames behind a global lock");
  run->add_option("--overcommit", run_args.overcommit, "Overcommitment factor(s) O, e.g. 1,2,4");
  run->add_option("--cgroup", run_args.cgroup, "Pre-created writable cgroup directory");
  run->add_option("--quota", run_args.quota, "Quota cores written to --cgroup, e.g. 2 or 1,2,4");
  run->add_option("--cpus", run_args.cpus, "CPU count used by the strategies (default: affinity)");
  run->add_option("--poll-ms", run_args.poll_ms, "Control interval of collaborative pools");
  run->add_option("--out", run_args.out, "Output directory")->required();

  std::string report_dir;
  bool report_plot = false;
  auto* report = app.add_subcommand("report", "Summarise the manifests under a directory");
  report->add_option("dir", report_dir)->required();
  report->add_flag("--plot", report_plot, "Also write SVG plots");

  WorkerOptions worker_opts;
  std::string worker_strategy = "collaborative", worker_overcommit = "1";
  std::int64_t worker_duration_ms = 5000, worker_poll_ms = 10;
  std::string worker_samples, worker_trace;
  auto* worker = app.add_subcommand("worker", "Run one experiment process (internal)");
  worker->group("");
  worker->add_option("--strategy", worker_strategy);
  worker->add_option("--processes", worker_opts.processes);
  worker->add_option("--cpus", worker_opts.cpus);
  worker->add_option("--rate", worker_opts.rate);
  worker->add_option("--duration-ms", worker_duration_ms);
  worker->add_option("--fib-n", worker_opts.fib_n);
  worker->add_flag("--contention", worker_opts.contention);
  worker->add_option("--overcommit", worker_overcommit);
  worker->add_option("--poll-ms", worker_poll_ms);
  worker->add_option("--samples", worker_samples)->required();
  worker->add_option("--trace", worker_trace)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*nproc) {
      const CpuBudget budget = detect_cpu_budget();
      if (nproc_verbose) {
        std::cerr << "affinity: " << budget.affinity_cpus << " CPUs\n";
        if (budget.quota) {
          std::cerr << "quota: " << budget.quota->value << " cores (" << to_string(budget.quota->source) << ")\n";
        }
        for (const auto& w : budget.warnings) std::cerr << "warning: " << w << '\n';
      }
      std::cout << budget.effective_cpus << '\n';
      return 0;
    }
    if (app.got_subcommand("calibrate")) {
      const auto cal = calibrate();
      std::cout << "fib_n " << cal.fib_n << '\n'
                << "item_ms " << static_cast<double>(cal.item_time.count()) / 1e6 << '\n'
                << "capacity_per_thread " << cal.capacity_per_thread << '\n';
      return 0;
    }
    if (*run) return cmd_run(run_args, argv[0]);
    if (*report) return cmd_report(report_dir, report_plot);
    if (*worker) {
      worker_opts.strategy = Strategy::parse(worker_strategy);
      worker_opts.overcommit = Rational::parse(worker_overcommit);
      worker_opts.duration = std::chrono::milliseconds(worker_duration_ms);
      worker_opts.poll_interval = std::chrono::milliseconds(worker_poll_ms);
      worker_opts.samples_csv = worker_samples;
      worker_opts.trace_csv = worker_trace;
      return run_worker(worker_opts, std::cin, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
