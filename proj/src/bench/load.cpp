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

#include "zerocast/bench/load.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

namespace zerocast
{
namespace bench
{

namespace
{

void worker_loop(uint32_t pct, std::chrono::microseconds window, const std::atomic<bool> & stop)
{
  using clock = std::chrono::steady_clock;
  const auto busy_span = window * pct / 100;
  auto window_start = clock::now();
  // The sink keeps the spin from being optimized away.
  volatile uint64_t sink = 0;
  while (!stop.load(std::memory_order_relaxed)) {
    const auto busy_until = window_start + busy_span;
    while (clock::now() < busy_until && !stop.load(std::memory_order_relaxed)) {
      sink = sink + 1;
    }
    window_start += window;
    std::this_thread::sleep_until(window_start);
  }
}

}  // namespace

void LoadGenerator::start(uint32_t pct, std::chrono::microseconds window)
{
  stop();
  if (pct == 0) {
    return;
  }
  pct = std::min<uint32_t>(pct, 100);
  stop_.store(false);
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  workers_.reserve(workers);
  for (unsigned i = 0; i < workers; ++i) {
    workers_.emplace_back([this, pct, window] {worker_loop(pct, window, stop_);});
  }
}

void LoadGenerator::stop()
{
  stop_.store(true);
  for (std::thread & worker : workers_) {
    worker.join();
  }
  workers_.clear();
}

Result<CpuTimes> read_cpu_times()
{
  std::ifstream stat("/proc/stat");
  std::string line;
  if (!stat || !std::getline(stat, line) || line.rfind("cpu ", 0) != 0) {
    return Status(Errc::io_error, "cannot read aggregate line of /proc/stat");
  }
  std::istringstream fields(line.substr(4));
  uint64_t value = 0;
  uint64_t total = 0;
  uint64_t idle = 0;
  int column = 0;
  while (fields >> value) {
    total += value;
    if (column == 3 || column == 4) {  // idle, iowait
      idle += value;
    }
    ++column;
  }
  if (column < 5) {
    return Status(Errc::io_error, "unexpected /proc/stat format");
  }
  return CpuTimes{total - idle, total};
}

Result<double> measure_cpu_utilization(std::chrono::milliseconds duration)
{
  auto before = read_cpu_times();
  if (!before.has_value()) {
    return before.status();
  }
  std::this_thread::sleep_for(duration);
  auto after = read_cpu_times();
  if (!after.has_value()) {
    return after.status();
  }
  const uint64_t total = after->total - before->total;
  if (total == 0) {
    return Status(Errc::io_error, "no CPU ticks elapsed during measurement");
  }
  return 100.0 * static_cast<double>(after->busy - before->busy) / static_cast<double>(total);
}

}  // namespace bench
}  // namespace zerocast
