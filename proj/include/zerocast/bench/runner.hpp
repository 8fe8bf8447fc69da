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

#ifndef ZEROCAST__BENCH__RUNNER_HPP_
#define ZEROCAST__BENCH__RUNNER_HPP_

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "zerocast/bench/stats.hpp"
#include "zerocast/status.hpp"

namespace zerocast
{
namespace bench
{

/// Transport labels as they appear in the CSV.
inline constexpr char kTransportZerocopy[] = "zerocopy";
inline constexpr char kTransportBaselineLabel[] = "baseline";
inline constexpr char kTransportBridgeZcToBaseline[] = "bridge_zc_to_baseline";
inline constexpr char kTransportBridgeBaselineToZc[] = "bridge_baseline_to_zc";

/// Shape of one measurement campaign.
struct ExperimentConfig
{
  std::vector<uint64_t> sizes{1024, 10 * 1024, 100 * 1024, 1024 * 1024};
  uint32_t count{1000};
  std::chrono::milliseconds period{100};
  uint32_t warmup{10};  // leading samples excluded from CSV and statistics
  std::vector<uint32_t> loads{0, 30, 60, 90};
  std::vector<std::string> transports{kTransportZerocopy, kTransportBaselineLabel};

  /// Broker to use; empty runs a private broker for the campaign.
  std::string broker_path;

  /// Binary spawned for worker roles; empty resolves to this executable,
  /// which must route worker invocations to run_worker_role().
  std::string helper;

  /// Give subscriber callback threads elevated (realtime FIFO) scheduling
  /// when permitted; falls back with a `prio=default` dataset note.
  bool realtime_subscribers{false};

  Status validate() const;
};

/// Output of a suite: post-warmup samples plus bookkeeping.
struct Dataset
{
  std::vector<Sample> samples;
  std::vector<std::string> notes;      // e.g. "prio=default"
  std::vector<CellKey> incomplete;     // cells aborted by timeout

  bool complete() const {return incomplete.empty();}
};

/// Latency vs message size: one (transport, size) cell per combination at
/// zero generated load.
Result<Dataset> run_latency_suite(const ExperimentConfig & config);

/// Latency stability under CPU load at a fixed size (the first entry of
/// `sizes`): one (transport, load) cell per combination, with the built-in
/// load generator running during measurement.
Result<Dataset> run_load_suite(const ExperimentConfig & config);

/// Bridge overhead: plain baseline plus both bridged routes across `sizes`,
/// with a bridge process relaying the test topic.
Result<Dataset> run_bridge_suite(const ExperimentConfig & config);

/// True when argv selects a hidden worker role (argv[1] starts with '_').
bool is_worker_invocation(int argc, char ** argv);

/// Runs a worker role to completion and returns the process exit code. Any
/// binary that spawns suites must dispatch to this at the top of main().
int run_worker_role(int argc, char ** argv);

}  // namespace bench
}  // namespace zerocast

#endif  // ZEROCAST__BENCH__RUNNER_HPP_
