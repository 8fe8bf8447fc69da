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

#ifndef ZEROCAST__BENCH__LOAD_HPP_
#define ZEROCAST__BENCH__LOAD_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <thread>
#include <vector>

#include "zerocast/status.hpp"

namespace zerocast
{
namespace bench
{

/// Built-in CPU load source: one duty-cycled busy-loop worker per logical
/// processor. Each worker spins for `pct`% of every window and sleeps for
/// the rest, so the aggregate utilization tracks the target without any
/// external tool.
class LoadGenerator
{
public:
  LoadGenerator() = default;
  ~LoadGenerator() {stop();}
  LoadGenerator(const LoadGenerator &) = delete;
  LoadGenerator & operator=(const LoadGenerator &) = delete;

  /// Starts workers at `pct` (0 is a no-op). Window defaults to 20 ms: short
  /// against the default 100 ms publish period, long against scheduler
  /// granularity.
  void start(uint32_t pct, std::chrono::microseconds window = std::chrono::microseconds(20000));

  void stop();

  bool running() const {return !workers_.empty();}

private:
  std::atomic<bool> stop_{false};
  std::vector<std::thread> workers_;
};

/// Aggregate CPU ticks from the host's accounting; busy excludes idle and
/// iowait.
struct CpuTimes
{
  uint64_t busy{0};
  uint64_t total{0};
};

Result<CpuTimes> read_cpu_times();

/// Samples host CPU accounting twice, `duration` apart, and returns the busy
/// share as a percentage. Used to calibrate the load generator.
Result<double> measure_cpu_utilization(std::chrono::milliseconds duration);

}  // namespace bench
}  // namespace zerocast

#endif  // ZEROCAST__BENCH__LOAD_HPP_
