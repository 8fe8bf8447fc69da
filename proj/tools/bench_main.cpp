// Copyright 2026 The Zerocast Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <chrono>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zerocast/bench/load.hpp"
#include "zerocast/bench/runner.hpp"
#include "zerocast/bench/stats.hpp"

namespace
{

using zerocast::bench::CellStats;
using zerocast::bench::Dataset;
using zerocast::bench::ExperimentConfig;

/// Persists and reports one finished suite; nonzero when cells were aborted.
int finish_suite(const Dataset & dataset, const std::string & out_path)
{
  const zerocast::Status written =
    zerocast::bench::write_csv(out_path, dataset.samples, dataset.notes);
  if (!written.ok()) {
    std::fprintf(stderr, "zerocast-bench: %s\n", written.to_string().c_str());
    return 2;
  }
  std::printf("%s", zerocast::bench::format_table(zerocast::bench::summarize(dataset.samples)).c_str());
  std::printf("wrote %zu samples to %s\n", dataset.samples.size(), out_path.c_str());
  for (const std::string & note : dataset.notes) {
    std::printf("note: %s\n", note.c_str());
  }
  if (!dataset.complete()) {
    std::fprintf(stderr, "zerocast-bench: %zu cell(s) incomplete\n", dataset.incomplete.size());
    return 1;
  }
  return 0;
}

/// Overhead per size for the bridged routes: bridged median minus the plain
/// baseline median from the same run.
void print_bridge_overhead(const std::vector<CellStats> & cells)
{
  std::map<uint64_t, uint64_t> baseline_p50;
  for (const CellStats & cell : cells) {
    if (cell.key.transport == zerocast::bench::kTransportBaselineLabel) {
      baseline_p50[cell.key.size_bytes] = cell.p50;
    }
  }
  std::printf("%-24s %10s %14s\n", "route", "size", "overhead_ns");
  for (const CellStats & cell : cells) {
    if (cell.key.transport == zerocast::bench::kTransportBaselineLabel) {
      continue;
    }
    const auto base = baseline_p50.find(cell.key.size_bytes);
    if (base == baseline_p50.end()) {
      continue;
    }
    const int64_t overhead =
      static_cast<int64_t>(cell.p50) - static_cast<int64_t>(base->second);
    std::printf(
      "%-24s %10llu %14lld\n", cell.key.transport.c_str(),
      static_cast<unsigned long long>(cell.key.size_bytes),
      static_cast<long long>(overhead));
  }
}

}  // namespace

int main(int argc, char ** argv)
{
  // The coordinator re-executes this binary for its measurement processes.
  if (zerocast::bench::is_worker_invocation(argc, argv)) {
    return zerocast::bench::run_worker_role(argc, argv);
  }

  CLI::App app{"zerocast benchmark suite"};
  app.require_subcommand(1);

  ExperimentConfig config;
  std::vector<std::string> transports = config.transports;
  uint64_t period_ms = 100;
  std::string out_path = "results.csv";

  auto add_common = [&](CLI::App * cmd) {
      cmd->add_option("--sizes", config.sizes, "Message sizes in bytes");
      cmd->add_option("--count", config.count, "Messages published per cell");
      cmd->add_option("--period-ms", period_ms, "Publish period in milliseconds");
      cmd->add_option("--warmup", config.warmup, "Leading samples excluded per cell");
      cmd->add_option("--out", out_path, "CSV output path");
      cmd->add_option(
        "--broker", config.broker_path,
        "Broker socket path (default: run a private broker for the campaign)");
    };

  CLI::App * latency = app.add_subcommand("latency", "Latency vs message size at idle");
  add_common(latency);
  latency->add_option("--transports", transports, "Transports to measure")
  ->check(
    CLI::IsMember(
  {
    zerocast::bench::kTransportZerocopy, zerocast::bench::kTransportBaselineLabel,
    zerocast::bench::kTransportBridgeZcToBaseline,
    zerocast::bench::kTransportBridgeBaselineToZc}));

  CLI::App * load = app.add_subcommand("load", "Latency stability under generated CPU load");
  add_common(load);
  load->add_option("--loads", config.loads, "Generated CPU load percentages");
  load->add_option("--transports", transports, "Transports to measure");

  CLI::App * bridge = app.add_subcommand("bridge", "Bridge overhead vs the plain baseline");
  add_common(bridge);

  CLI::App * summarize_cmd =
    app.add_subcommand("summarize", "Statistics table for an existing CSV dataset");
  std::string in_path;
  summarize_cmd->add_option("csv", in_path, "Input CSV")->required();

  CLI::App * calibrate =
    app.add_subcommand("calibrate-load", "Compare the load generator against CPU accounting");
  uint32_t target_pct = 50;
  uint64_t duration_ms = 1000;
  calibrate->add_option("--target", target_pct, "Duty cycle percentage to generate");
  calibrate->add_option("--duration-ms", duration_ms, "Measurement window");

  CLI11_PARSE(app, argc, argv);

  config.period = std::chrono::milliseconds(period_ms);
  config.transports = transports;

  if (*latency) {
    auto dataset = zerocast::bench::run_latency_suite(config);
    if (!dataset.has_value()) {
      std::fprintf(stderr, "zerocast-bench: %s\n", dataset.status().to_string().c_str());
      return 2;
    }
    return finish_suite(*dataset, out_path);
  }

  if (*load) {
    if (load->count("--sizes") == 0) {
      config.sizes = {100 * 1024};  // stability experiment default: fixed size
    }
    auto dataset = zerocast::bench::run_load_suite(config);
    if (!dataset.has_value()) {
      std::fprintf(stderr, "zerocast-bench: %s\n", dataset.status().to_string().c_str());
      return 2;
    }
    return finish_suite(*dataset, out_path);
  }

  if (*bridge) {
    auto dataset = zerocast::bench::run_bridge_suite(config);
    if (!dataset.has_value()) {
      std::fprintf(stderr, "zerocast-bench: %s\n", dataset.status().to_string().c_str());
      return 2;
    }
    const int rc = finish_suite(*dataset, out_path);
    print_bridge_overhead(zerocast::bench::summarize(dataset->samples));
    return rc;
  }

  if (*summarize_cmd) {
    auto samples = zerocast::bench::parse_csv(in_path);
    if (!samples.has_value()) {
      std::fprintf(stderr, "zerocast-bench: %s\n", samples.status().to_string().c_str());
      return 2;
    }
    std::printf("%s", zerocast::bench::format_table(zerocast::bench::summarize(*samples)).c_str());
    return 0;
  }

  if (*calibrate) {
    zerocast::bench::LoadGenerator generator;
    generator.start(target_pct);
    auto measured =
      zerocast::bench::measure_cpu_utilization(std::chrono::milliseconds(duration_ms));
    generator.stop();
    if (!measured.has_value()) {
      std::fprintf(stderr, "zerocast-bench: %s\n", measured.status().to_string().c_str());
      return 2;
    }
    std::printf("target=%u%% measured=%.1f%%\n", target_pct, *measured);
    return 0;
  }

  return 0;
}
