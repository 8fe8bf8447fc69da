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

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <thread>

#include "CLI11.hpp"
#include "zerocast/bridge.hpp"

namespace
{
std::atomic<bool> g_stop{false};

void handle_signal(int)
{
  g_stop.store(true);
}
}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"zerocast bridge: relays one topic between the transports"};
  zerocast::BridgeOptions options;
  std::string direction = "both";
  app.add_option("--topic", options.topic, "Topic to relay")->required();
  app.add_option("--direction", direction, "both | zc-to-baseline | baseline-to-zc")
  ->check(CLI::IsMember({"both", "zc-to-baseline", "baseline-to-zc"}));
  app.add_option(
    "--broker", options.broker_path,
    "Broker socket path (default: $ZEROCAST_BROKER, then /tmp/zerocast.sock)");
  CLI11_PARSE(app, argc, argv);

  if (direction == "zc-to-baseline") {
    options.direction = zerocast::BridgeOptions::Direction::kZcToBaseline;
  } else if (direction == "baseline-to-zc") {
    options.direction = zerocast::BridgeOptions::Direction::kBaselineToZc;
  } else {
    options.direction = zerocast::BridgeOptions::Direction::kBoth;
  }

  auto bridge = zerocast::Bridge::start(options);
  if (!bridge.has_value()) {
    std::fprintf(stderr, "bridge: %s\n", bridge.status().to_string().c_str());
    return 1;
  }

  // Bridge::stop() takes a lock, so signals only raise a flag; this thread
  // turns the flag into the actual stop call.
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::thread watcher(
    [&bridge] {
      while (!g_stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
      (*bridge)->stop();
    });

  const zerocast::Status status = (*bridge)->run();
  g_stop.store(true);
  watcher.join();

  const zerocast::BridgeStats stats = (*bridge)->stats();
  std::fprintf(
    stderr, "bridge exit: relayed_to_baseline=%llu relayed_to_zerocopy=%llu suppressed=%llu "
    "dropped=%llu\n",
    static_cast<unsigned long long>(stats.relayed_to_baseline),
    static_cast<unsigned long long>(stats.relayed_to_zerocopy),
    static_cast<unsigned long long>(stats.suppressed),
    static_cast<unsigned long long>(stats.dropped));
  if (!status.ok()) {
    std::fprintf(stderr, "bridge: %s\n", status.to_string().c_str());
    return 1;
  }
  return 0;
}
