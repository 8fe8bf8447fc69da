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

#ifndef ZEROCAST__BROKER_DAEMON_HPP_
#define ZEROCAST__BROKER_DAEMON_HPP_

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "zerocast/broker_core.hpp"
#include "zerocast/status.hpp"
#include "zerocast/wire.hpp"

namespace zerocast::broker
{

struct DaemonOptions
{
  /// Stream endpoint path; empty resolves via ZEROCAST_BROKER, then default.
  std::string socket_path;
  Options core;
};

/// The broker process: a poll-driven loop over one local stream socket.
///
/// Every request mutates state through a single apply path, so the effects of
/// concurrent clients always equal some serial order of their completed
/// frames. A frame that never arrives completely has no effect at all: bytes
/// sit in the session's parser until the full frame is present, and a session
/// that dies mid-frame is simply discarded along with them.
///
/// Deliveries are committed when the notification frame is placed in the
/// subscriber's session buffer; a subscriber that dies afterwards is cleaned
/// up exactly like one that had received and held the message.
class BrokerDaemon
{
public:
  explicit BrokerDaemon(DaemonOptions options = DaemonOptions{});
  ~BrokerDaemon();

  BrokerDaemon(const BrokerDaemon &) = delete;
  BrokerDaemon & operator=(const BrokerDaemon &) = delete;

  /// Binds and listens; clients may connect as soon as this returns.
  Status start();

  /// Serves until stop(). Call from the thread that owns the loop.
  void run();

  /// start() then run().
  Status serve();

  /// Wakes the loop and makes run() return. Safe from any thread.
  void stop();

  const std::string & socket_path() const {return path_;}

  /// Deterministic rendering of broker state; safe while the loop runs.
  std::string debug_dump() const;

  /// Live session count (tests: fault isolation checks).
  size_t session_count() const {return session_count_.load();}

private:
  struct Session
  {
    int fd{-1};
    uint64_t client{0};
    wire::FrameParser parser;
    std::vector<uint8_t> outbox;
    size_t sent{0};
    bool doomed{false};
  };

  void accept_ready();
  void read_session(Session & session);
  void flush_session(Session & session);
  void apply_frame(Session & session, const wire::Frame & frame);
  void enqueue(Session & session, uint8_t opcode, const std::vector<uint8_t> & payload);
  void route(const std::vector<Emission> & emissions);
  void reap_doomed();
  void violate(Session & session, Errc code, const std::string & message);
  Session * session_of_endpoint(uint64_t endpoint_id);

  void on_register_publisher(Session & session, const wire::Frame & frame);
  void on_register_subscriber(Session & session, const wire::Frame & frame);
  void on_publish_entry(Session & session, const wire::Frame & frame);
  void on_ref(Session & session, const wire::Frame & frame, bool incr);
  void on_baseline_publish(Session & session, const wire::Frame & frame);

  DaemonOptions options_;
  std::string path_;
  int listen_fd_{-1};
  int wake_fds_[2]{-1, -1};
  std::atomic<bool> stop_{false};
  std::atomic<size_t> session_count_{0};

  mutable std::mutex mu_;  // guards core_ and endpoint_client_
  BrokerCore core_;
  std::map<uint64_t, uint64_t> endpoint_client_;

  uint64_t next_client_{1};
  std::map<int, Session> sessions_;        // keyed by fd
  std::map<uint64_t, int> client_fd_;
};

}  // namespace zerocast::broker

#endif  // ZEROCAST__BROKER_DAEMON_HPP_
