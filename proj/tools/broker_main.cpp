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

#include <csignal>
#include <cstdio>

#include "CLI11.hpp"
#include "zerocast/broker_daemon.hpp"

namespace
{
zerocast::broker::BrokerDaemon * g_daemon = nullptr;

// stop() only stores an atomic and writes one byte to the wake pipe, both
// async-signal-safe.
void handle_signal(int)
{
  if (g_daemon != nullptr) {
    g_daemon->stop();
  }
}
}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"zerocast broker: transactional arbiter for same-host pub/sub"};
  zerocast::broker::DaemonOptions options;
  app.add_option(
    "--socket", options.socket_path,
    "Stream socket path (default: $ZEROCAST_BROKER, then /tmp/zerocast.sock)");
  app.add_option(
    "--queue-capacity", options.core.queue_capacity, "Per-subscriber delivery queue depth");
  app.add_option("--arena-capacity", options.core.arena_capacity, "Bytes per publisher arena");
  app.add_option(
    "--max-baseline-bytes", options.core.max_baseline_bytes,
    "Largest accepted copy-transport payload");
  CLI11_PARSE(app, argc, argv);

  zerocast::broker::BrokerDaemon daemon(options);
  g_daemon = &daemon;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  const zerocast::Status status = daemon.serve();
  if (!status.ok()) {
    std::fprintf(stderr, "broker: %s\n", status.to_string().c_str());
    return 1;
  }
  return 0;
}
