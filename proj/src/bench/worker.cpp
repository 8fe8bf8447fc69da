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
//
// Hidden worker roles spawned by the benchmark coordinator. Each role talks
// a line protocol on stdio: READY/DONE/SAMPLE/END upward, GO/DONE/EXIT
// downward. Diagnostics go to stderr only, so stdout stays parseable.

#include <poll.h>
#include <pthread.h>
#include <time.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "zerocast/bench/runner.hpp"
#include "zerocast/bridge.hpp"
#include "zerocast/client.hpp"
#include "zerocast/log.hpp"
#include "zerocast/schema.hpp"

namespace zerocast
{
namespace bench
{

namespace
{

uint64_t monotonic_ns()
{
  timespec ts{};
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return static_cast<uint64_t>(ts.tv_sec) * 1000000000ull + static_cast<uint64_t>(ts.tv_nsec);
}

void emit(const std::string & line)
{
  std::fputs((line + "\n").c_str(), stdout);
  std::fflush(stdout);
}

/// Reads one stdin line without blocking longer than `timeout_ms`
/// (-1 blocks). Returns false on timeout or EOF with nothing buffered.
bool read_stdin_line(std::string & out, int timeout_ms)
{
  static std::string buffer;
  for (;;) {
    const size_t newline = buffer.find('\n');
    if (newline != std::string::npos) {
      out = buffer.substr(0, newline);
      buffer.erase(0, newline + 1);
      return true;
    }
    pollfd pfd{STDIN_FILENO, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc <= 0) {
      return false;
    }
    char chunk[256];
    const ssize_t n = ::read(STDIN_FILENO, chunk, sizeof(chunk));
    if (n <= 0) {
      return false;
    }
    buffer.append(chunk, static_cast<size_t>(n));
  }
}

/// Message layout used by every benchmark cell: monotonic send stamp at
/// offset 0, sequence number in the `height` field, payload in the byte
/// sequence.
constexpr size_t kStampOffset = 0;
constexpr size_t kSeqOffset = 8;

int run_publisher(const std::vector<std::string> & args)
{
  if (args.size() != 6) {
    std::fprintf(stderr, "_pub <socket> <topic> <zc|baseline> <size> <count> <period_us>\n");
    return 64;
  }
  const std::string & socket_path = args[0];
  const std::string & topic = args[1];
  const bool zero_copy = args[2] == "zc";
  const uint64_t size = std::stoull(args[3]);
  const uint32_t count = static_cast<uint32_t>(std::stoul(args[4]));
  const auto period = std::chrono::microseconds(std::stoull(args[5]));

  auto context = Context::connect(socket_path);
  if (!context.has_value()) {
    std::fprintf(stderr, "pub connect: %s\n", context.status().to_string().c_str());
    return 1;
  }

  std::shared_ptr<Publisher> zc_pub;
  std::shared_ptr<BaselinePublisher> baseline_pub;
  if (zero_copy) {
    auto pub = (*context)->create_publisher(topic, pointcloud_like());
    if (!pub.has_value()) {
      std::fprintf(stderr, "pub register: %s\n", pub.status().to_string().c_str());
      return 1;
    }
    zc_pub = *pub;
  } else {
    auto pub = (*context)->create_baseline_publisher(topic, pointcloud_like());
    if (!pub.has_value()) {
      std::fprintf(stderr, "pub register: %s\n", pub.status().to_string().c_str());
      return 1;
    }
    baseline_pub = *pub;
  }

  const std::vector<uint8_t> payload(size, 0xAB);
  HeapMessage heap(pointcloud_like());  // reused by the baseline path
  if (!zero_copy) {
    heap.seq_assign(0, payload.data(), payload.size());
  }

  emit("READY");
  std::string line;
  if (!read_stdin_line(line, -1) || line != "GO") {
    std::fprintf(stderr, "pub: expected GO, got '%s'\n", line.c_str());
    return 1;
  }

  const auto start = std::chrono::steady_clock::now();
  for (uint32_t i = 0; i < count; ++i) {
    std::this_thread::sleep_until(start + i * period);
    if (zero_copy) {
      auto msg = zc_pub->allocate();
      if (!msg.has_value()) {
        emit("DROP " + std::to_string(i) + " alloc");
        continue;
      }
      if (!msg->seq_append(0, payload.data(), payload.size()).ok()) {
        emit("DROP " + std::to_string(i) + " alloc");
        continue;
      }
      std::memcpy(msg->root() + kSeqOffset, &i, sizeof(i));
      const uint64_t stamp = monotonic_ns();
      std::memcpy(msg->root() + kStampOffset, &stamp, sizeof(stamp));
      auto published = zc_pub->publish(std::move(*msg));
      if (!published.has_value()) {
        emit("DROP " + std::to_string(i) + " queue");
      }
    } else {
      std::memcpy(heap.root() + kSeqOffset, &i, sizeof(i));
      const uint64_t stamp = monotonic_ns();
      std::memcpy(heap.root() + kStampOffset, &stamp, sizeof(stamp));
      if (!baseline_pub->publish(heap.root()).ok()) {
        emit("DROP " + std::to_string(i) + " queue");
      }
    }
  }
  emit("DONE");
  read_stdin_line(line, -1);  // EXIT (or EOF): keep the arena alive till then
  return 0;
}

struct SubRecorder
{
  std::mutex mu;
  std::vector<std::pair<uint32_t, uint64_t>> samples;  // (seq, latency_ns)
  std::atomic<uint64_t> last_activity_ns{0};
  std::atomic<uint32_t> received{0};
  bool try_realtime{false};
  std::atomic<const char *> prio_label{"none"};
  bool prio_attempted{false};  // only touched on the dispatch thread

  void on_message(const uint8_t * root)
  {
    const uint64_t now = monotonic_ns();
    if (try_realtime && !prio_attempted) {
      prio_attempted = true;  // dispatch thread: decided once, before timing
      sched_param param{};
      param.sched_priority = 1;
      prio_label.store(
        pthread_setschedparam(pthread_self(), SCHED_FIFO, &param) == 0 ? "fifo" : "default");
    }
    uint64_t stamp = 0;
    uint32_t seq = 0;
    std::memcpy(&stamp, root + kStampOffset, sizeof(stamp));
    std::memcpy(&seq, root + kSeqOffset, sizeof(seq));
    {
      std::lock_guard<std::mutex> lock(mu);
      samples.emplace_back(seq, now >= stamp ? now - stamp : 0);
    }
    last_activity_ns.store(now);
    received.fetch_add(1);
  }
};

int run_subscriber(const std::vector<std::string> & args)
{
  if (args.size() != 6) {
    std::fprintf(stderr, "_sub <socket> <topic> <zc|baseline> <count> <period_us> <rt>\n");
    return 64;
  }
  const std::string & socket_path = args[0];
  const std::string & topic = args[1];
  const bool zero_copy = args[2] == "zc";
  const uint32_t count = static_cast<uint32_t>(std::stoul(args[3]));
  const uint64_t period_us = std::stoull(args[4]);
  const bool realtime = args[5] == "1";

  auto context = Context::connect(socket_path);
  if (!context.has_value()) {
    std::fprintf(stderr, "sub connect: %s\n", context.status().to_string().c_str());
    return 1;
  }

  auto recorder = std::make_shared<SubRecorder>();
  recorder->try_realtime = realtime;

  std::shared_ptr<Subscription> zc_sub;
  std::shared_ptr<BaselineSubscription> baseline_sub;
  if (zero_copy) {
    auto sub = (*context)->create_subscription(
      topic, pointcloud_like(),
      [recorder](const SharedHandle & h) {recorder->on_message(h.root());});
    if (!sub.has_value()) {
      std::fprintf(stderr, "sub register: %s\n", sub.status().to_string().c_str());
      return 1;
    }
    zc_sub = *sub;
  } else {
    auto sub = (*context)->create_baseline_subscription(
      topic, pointcloud_like(),
      [recorder](const HeapMessage & m, uint64_t) {recorder->on_message(m.root());});
    if (!sub.has_value()) {
      std::fprintf(stderr, "sub register: %s\n", sub.status().to_string().c_str());
      return 1;
    }
    baseline_sub = *sub;
  }

  emit("READY");
  recorder->last_activity_ns.store(monotonic_ns());

  // A delivery gap ten periods long means the cell is dead: abort and let
  // the coordinator mark it incomplete. The floor keeps short-period cells
  // from tripping on scheduler noise during startup.
  const uint64_t gap_limit_ns = std::max<uint64_t>(10 * period_us * 1000ull, 3000000000ull);
  bool done_seen = false;
  bool timed_out = false;
  uint64_t done_quiesce_start = 0;
  for (;;) {
    if (recorder->received.load() >= count) {
      break;
    }
    const uint64_t now = monotonic_ns();
    const uint64_t last = recorder->last_activity_ns.load();
    if (done_seen && now - std::max(done_quiesce_start, last) > 300000000ull) {
      break;  // publisher finished and deliveries quiesced
    }
    if (!done_seen && now - last > gap_limit_ns) {
      timed_out = true;
      break;
    }
    std::string line;
    if (read_stdin_line(line, 50) && line == "DONE") {
      done_seen = true;
      done_quiesce_start = monotonic_ns();
    }
  }

  std::lock_guard<std::mutex> lock(recorder->mu);
  for (const auto & [seq, latency] : recorder->samples) {
    emit("SAMPLE " + std::to_string(seq) + " " + std::to_string(latency));
  }
  if (timed_out) {
    emit("TIMEOUT received=" + std::to_string(recorder->samples.size()));
    return 2;
  }
  emit(
    std::string("END prio=") + recorder->prio_label.load() +
    " received=" + std::to_string(recorder->samples.size()));
  return 0;
}

int run_bridge_role(const std::vector<std::string> & args)
{
  if (args.size() != 3) {
    std::fprintf(stderr, "_bridge <socket> <topic> <both|zc-to-baseline|baseline-to-zc>\n");
    return 64;
  }
  BridgeOptions options;
  options.broker_path = args[0];
  options.topic = args[1];
  if (args[2] == "both") {
    options.direction = BridgeOptions::Direction::kBoth;
  } else if (args[2] == "zc-to-baseline") {
    options.direction = BridgeOptions::Direction::kZcToBaseline;
  } else if (args[2] == "baseline-to-zc") {
    options.direction = BridgeOptions::Direction::kBaselineToZc;
  } else {
    std::fprintf(stderr, "bad direction: %s\n", args[2].c_str());
    return 64;
  }

  auto bridge = Bridge::start(options);
  if (!bridge.has_value()) {
    std::fprintf(stderr, "bridge start: %s\n", bridge.status().to_string().c_str());
    return 1;
  }
  std::thread supervisor([&] {
      if (!(*bridge)->run().ok()) {
        _exit(3);  // broker lost while relaying
      }
    });

  emit("READY");
  std::string line;
  while (read_stdin_line(line, -1)) {
    if (line == "EXIT") {
      break;
    }
  }
  (*bridge)->stop();
  supervisor.join();
  return 0;
}

}  // namespace

bool is_worker_invocation(int argc, char ** argv)
{
  return argc >= 2 && argv[1][0] == '_';
}

int run_worker_role(int argc, char ** argv)
{
  const std::string role = argv[1];
  std::vector<std::string> args(argv + 2, argv + argc);
  if (role == "_pub") {
    return run_publisher(args);
  }
  if (role == "_sub") {
    return run_subscriber(args);
  }
  if (role == "_bridge") {
    return run_bridge_role(args);
  }
  std::fprintf(stderr, "unknown worker role: %s\n", role.c_str());
  return 64;
}

}  // namespace bench
}  // namespace zerocast
