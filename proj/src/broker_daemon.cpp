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

#include "zerocast/broker_daemon.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/mman.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>
#include <variant>

#include "zerocast/log.hpp"

namespace zerocast::broker
{

namespace
{

// A session whose peer stops draining for long enough to pile this much up
// is treated as dead; buffered-but-unsent deliveries are then cleaned up
// exactly like handles a crashed process held.
constexpr size_t kMaxOutboxBytes = 256u << 20;

/// Errors that brand the sender as broken (or hostile): the reply is a last
/// courtesy, then the session is terminated. Everything else is an ordinary
/// failed request on a healthy session.
bool fatal_code(Errc code)
{
  return code == Errc::protocol_error || code == Errc::not_holder ||
         code == Errc::unknown_entry;
}

}  // namespace

BrokerDaemon::BrokerDaemon(DaemonOptions options)
: options_(std::move(options)), core_(options_.core)
{
}

BrokerDaemon::~BrokerDaemon()
{
  for (auto & [fd, session] : sessions_) {
    ::close(fd);
  }
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    ::unlink(path_.c_str());
  }
  for (int fd : wake_fds_) {
    if (fd >= 0) {
      ::close(fd);
    }
  }
}

Status BrokerDaemon::start()
{
  path_ = wire::resolve_socket_path(options_.socket_path);

  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path_.size() >= sizeof(addr.sun_path)) {
    return Status(Errc::invalid_argument, "socket path too long: " + path_);
  }
  std::memcpy(addr.sun_path, path_.c_str(), path_.size() + 1);

  listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) {
    return Status(Errc::io_error, std::string("socket: ") + strerror(errno));
  }
  ::unlink(path_.c_str());  // stale endpoint from a dead broker
  if (::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0) {
    Status st(Errc::io_error, "bind " + path_ + ": " + strerror(errno));
    ::close(listen_fd_);
    listen_fd_ = -1;
    return st;
  }
  if (::listen(listen_fd_, 64) != 0) {
    Status st(Errc::io_error, std::string("listen: ") + strerror(errno));
    ::close(listen_fd_);
    listen_fd_ = -1;
    return st;
  }
  if (::pipe2(wake_fds_, O_CLOEXEC | O_NONBLOCK) != 0) {
    return Status(Errc::io_error, std::string("pipe2: ") + strerror(errno));
  }
  ZC_LOG_INFO("broker listening path=%s", path_.c_str());
  return Status{};
}

Status BrokerDaemon::serve()
{
  Status st = start();
  if (!st.ok()) {
    return st;
  }
  run();
  return Status{};
}

void BrokerDaemon::stop()
{
  stop_.store(true);
  if (wake_fds_[1] >= 0) {
    const char byte = 0;
    (void)!::write(wake_fds_[1], &byte, 1);
  }
}

void BrokerDaemon::run()
{
  std::vector<pollfd> fds;
  while (!stop_.load()) {
    fds.clear();
    fds.push_back({wake_fds_[0], POLLIN, 0});
    fds.push_back({listen_fd_, POLLIN, 0});
    for (const auto & [fd, session] : sessions_) {
      short events = POLLIN;
      if (session.sent < session.outbox.size()) {
        events |= POLLOUT;
      }
      fds.push_back({fd, events, 0});
    }

    const int ready = ::poll(fds.data(), fds.size(), -1);
    if (ready < 0) {
      if (errno == EINTR) {
        continue;
      }
      ZC_LOG_ERROR("poll: %s", strerror(errno));
      break;
    }

    if (fds[0].revents != 0) {
      char drain[64];
      while (::read(wake_fds_[0], drain, sizeof(drain)) > 0) {
      }
    }
    // fds[2..] line up with sessions_ iteration order (both come from the
    // same map walk); new sessions are accepted only after this pass.
    size_t i = 2;
    for (auto & [fd, session] : sessions_) {
      if (i >= fds.size() || fds[i].fd != fd) {
        break;
      }
      const short revents = fds[i++].revents;
      if ((revents & POLLIN) != 0) {
        read_session(session);
      }
      if (!session.doomed && (revents & POLLOUT) != 0) {
        flush_session(session);
      }
      if ((revents & (POLLERR | POLLNVAL)) != 0) {
        session.doomed = true;
      }
      if ((revents & POLLHUP) != 0 && (revents & POLLIN) == 0) {
        session.doomed = true;
      }
    }
    if ((fds[1].revents & POLLIN) != 0) {
      accept_ready();
    }
    reap_doomed();
  }
}

void BrokerDaemon::accept_ready()
{
  for (;;) {
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_NONBLOCK | SOCK_CLOEXEC);
    if (fd < 0) {
      return;
    }
    Session session;
    session.fd = fd;
    session.client = next_client_++;
    client_fd_[session.client] = fd;
    sessions_.emplace(fd, std::move(session));
    session_count_.fetch_add(1);
    ZC_LOG_DEBUG("session open client=%llu fd=%d",
      static_cast<unsigned long long>(next_client_ - 1), fd);
  }
}

void BrokerDaemon::read_session(Session & session)
{
  char buf[65536];
  for (;;) {
    const ssize_t n = ::recv(session.fd, buf, sizeof(buf), 0);
    if (n > 0) {
      session.parser.feed(buf, static_cast<size_t>(n));
      while (!session.doomed) {
        auto frame = session.parser.next();
        if (!frame.has_value()) {
          break;
        }
        apply_frame(session, *frame);
      }
      if (session.parser.violated()) {
        session.doomed = true;
      }
      if (session.doomed) {
        return;
      }
      continue;
    }
    if (n == 0) {
      session.doomed = true;  // peer closed; partial frame (if any) discarded
      return;
    }
    if (errno == EAGAIN || errno == EWOULDBLOCK) {
      return;
    }
    if (errno == EINTR) {
      continue;
    }
    session.doomed = true;
    return;
  }
}

void BrokerDaemon::flush_session(Session & session)
{
  while (session.sent < session.outbox.size()) {
    const ssize_t n = ::send(
      session.fd, session.outbox.data() + session.sent,
      session.outbox.size() - session.sent, MSG_NOSIGNAL);
    if (n > 0) {
      session.sent += static_cast<size_t>(n);
      continue;
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      return;
    }
    if (n < 0 && errno == EINTR) {
      continue;
    }
    session.doomed = true;
    return;
  }
  session.outbox.clear();
  session.sent = 0;
}

void BrokerDaemon::enqueue(
  Session & session, uint8_t opcode, const std::vector<uint8_t> & payload)
{
  if (session.doomed) {
    return;
  }
  const auto frame = wire::encode_frame(opcode, payload);
  session.outbox.insert(session.outbox.end(), frame.begin(), frame.end());
  if (session.outbox.size() - session.sent > kMaxOutboxBytes) {
    ZC_LOG_WARN("session stalled, dropping client=%llu",
      static_cast<unsigned long long>(session.client));
    session.doomed = true;
    return;
  }
  flush_session(session);
}

BrokerDaemon::Session * BrokerDaemon::session_of_endpoint(uint64_t endpoint_id)
{
  uint64_t client = 0;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = endpoint_client_.find(endpoint_id);
    if (it == endpoint_client_.end()) {
      return nullptr;
    }
    client = it->second;
  }
  auto fd_it = client_fd_.find(client);
  if (fd_it == client_fd_.end()) {
    return nullptr;
  }
  Session & session = sessions_.at(fd_it->second);
  return session.doomed ? nullptr : &session;
}

void BrokerDaemon::route(const std::vector<Emission> & emissions)
{
  for (const auto & emission : emissions) {
    if (const auto * d = std::get_if<DeliveryEmission>(&emission)) {
      if (Session * s = session_of_endpoint(d->msg.subscriber_id)) {
        enqueue(*s, wire::kDelivery, wire::encode(d->msg));
      }
    } else if (const auto * r = std::get_if<ReclaimEmission>(&emission)) {
      if (Session * s = session_of_endpoint(r->msg.publisher_id)) {
        enqueue(*s, wire::kReclaimNotice, wire::encode(r->msg));
      }
    } else if (const auto * a = std::get_if<AnnounceEmission>(&emission)) {
      if (Session * s = session_of_endpoint(a->msg.subscriber_id)) {
        enqueue(*s, wire::kArenaAnnounce, wire::encode(a->msg));
      }
    } else if (const auto * b = std::get_if<BaselineDeliveryEmission>(&emission)) {
      if (Session * s = session_of_endpoint(b->msg.subscriber_id)) {
        enqueue(*s, wire::kBaselineDelivery, wire::encode(b->msg));
      }
    } else if (const auto * u = std::get_if<UnlinkArenaEmission>(&emission)) {
      // The owner died; remove the name now, the object lives on while
      // subscribers keep it mapped.
      ::shm_unlink(("/" + u->arena_name).c_str());
    }
  }
}

void BrokerDaemon::reap_doomed()
{
  bool again = true;
  while (again) {
    again = false;
    for (auto it = sessions_.begin(); it != sessions_.end(); ++it) {
      if (!it->second.doomed) {
        continue;
      }
      Session session = std::move(it->second);
      sessions_.erase(it);
      client_fd_.erase(session.client);
      session_count_.fetch_sub(1);
      ::close(session.fd);

      std::vector<Emission> emissions;
      {
        std::lock_guard<std::mutex> lock(mu_);
        emissions = core_.process_exit(session.client);
      }
      ZC_LOG_DEBUG("session closed client=%llu",
        static_cast<unsigned long long>(session.client));
      route(emissions);  // may doom further sessions: rescan
      again = true;
      break;
    }
  }
}

void BrokerDaemon::violate(Session & session, Errc code, const std::string & message)
{
  enqueue(session, wire::kError, wire::encode_error(code, message));
  session.doomed = true;
}

void BrokerDaemon::apply_frame(Session & session, const wire::Frame & frame)
{
  switch (frame.opcode) {
    case wire::kRegisterPublisher:
      on_register_publisher(session, frame);
      return;
    case wire::kRegisterSubscriber:
      on_register_subscriber(session, frame);
      return;
    case wire::kPublishEntry:
      on_publish_entry(session, frame);
      return;
    case wire::kIncrRef:
      on_ref(session, frame, true);
      return;
    case wire::kDecrRef:
      on_ref(session, frame, false);
      return;
    case wire::kBaselinePublish:
      on_baseline_publish(session, frame);
      return;
    default:
      violate(session, Errc::protocol_error,
        "unexpected opcode " + std::to_string(frame.opcode));
      return;
  }
}

void BrokerDaemon::on_register_publisher(Session & session, const wire::Frame & frame)
{
  auto request = wire::decode_register_request(frame.payload);
  if (!request.has_value()) {
    violate(session, Errc::protocol_error, "malformed register-publisher");
    return;
  }
  std::vector<Emission> emissions;
  std::vector<uint8_t> reply;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto result = core_.register_publisher(
      session.client, request->pid, request->transport, request->topic);
    if (!result.has_value()) {
      enqueue(session, wire::kError,
        wire::encode_error(result.status().code(), result.status().detail()));
      if (fatal_code(result.status().code())) {
        session.doomed = true;
      }
      return;
    }
    endpoint_client_[result->publisher_id] = session.client;
    reply = wire::encode(
      wire::RegisterPublisherReply{
        result->publisher_id, result->subscriber_count, result->arena});
    emissions = std::move(result->emissions);
  }
  enqueue(session, wire::kRegisterPublisher, reply);
  route(emissions);
}

void BrokerDaemon::on_register_subscriber(Session & session, const wire::Frame & frame)
{
  auto request = wire::decode_register_request(frame.payload);
  if (!request.has_value()) {
    violate(session, Errc::protocol_error, "malformed register-subscriber");
    return;
  }
  std::vector<uint8_t> reply;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto result = core_.register_subscriber(
      session.client, request->pid, request->transport, request->topic);
    if (!result.has_value()) {
      enqueue(session, wire::kError,
        wire::encode_error(result.status().code(), result.status().detail()));
      if (fatal_code(result.status().code())) {
        session.doomed = true;
      }
      return;
    }
    endpoint_client_[result->subscriber_id] = session.client;
    reply = wire::encode(
      wire::RegisterSubscriberReply{result->subscriber_id, std::move(result->arenas)});
  }
  enqueue(session, wire::kRegisterSubscriber, reply);
}

void BrokerDaemon::on_publish_entry(Session & session, const wire::Frame & frame)
{
  auto request = wire::decode_publish_request(frame.payload);
  if (!request.has_value()) {
    violate(session, Errc::protocol_error, "malformed publish");
    return;
  }

  // Work out every frame to send while holding the state lock, then send
  // after: a delivery is "committed" the moment it is decided here, and a
  // send that later fails is indistinguishable from the subscriber crashing
  // with the message in hand (its credit is reclaimed with the session).
  std::vector<std::pair<uint64_t, std::vector<uint8_t>>> deliveries;  // endpoint, payload
  std::vector<Emission> settled;
  std::vector<uint8_t> reply;
  Status failure;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto result = core_.publish_entry(session.client, request->publisher_id, request->address);
    if (!result.has_value()) {
      failure = result.status();
    } else {
      for (uint64_t subscriber : result->pending) {
        bool alive = false;
        auto it = endpoint_client_.find(subscriber);
        if (it != endpoint_client_.end()) {
          auto fd_it = client_fd_.find(it->second);
          alive = fd_it != client_fd_.end() && !sessions_.at(fd_it->second).doomed;
        }
        if (alive) {
          auto committed = core_.commit_delivery(
            request->publisher_id, result->entry_id, subscriber);
          if (committed.has_value()) {
            const auto & d = std::get<DeliveryEmission>(*committed);
            deliveries.emplace_back(subscriber, wire::encode(d.msg));
          }
        } else {
          auto abandoned = core_.abandon_delivery(
            request->publisher_id, result->entry_id, subscriber);
          if (abandoned.has_value()) {
            settled.insert(settled.end(), abandoned->begin(), abandoned->end());
          }
        }
      }
      settled.insert(settled.end(), result->emissions.begin(), result->emissions.end());
      reply = wire::encode(wire::PublishReply{result->entry_id});
    }
  }
  if (!failure.ok()) {
    enqueue(session, wire::kError, wire::encode_error(failure.code(), failure.detail()));
    if (fatal_code(failure.code())) {
      session.doomed = true;
    }
    return;
  }
  for (auto & [subscriber, payload] : deliveries) {
    if (Session * s = session_of_endpoint(subscriber)) {
      enqueue(*s, wire::kDelivery, payload);
    }
  }
  enqueue(session, wire::kPublishEntry, reply);
  route(settled);
}

void BrokerDaemon::on_ref(Session & session, const wire::Frame & frame, bool incr)
{
  auto request = wire::decode_ref_request(frame.payload);
  if (!request.has_value()) {
    violate(session, Errc::protocol_error, "malformed ref request");
    return;
  }
  Status failure;
  std::vector<Emission> emissions;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (incr) {
      failure = core_.incr_ref(
        session.client, request->holder_id, request->publisher_id, request->entry_id);
    } else {
      auto result = core_.decr_ref(
        session.client, request->holder_id, request->publisher_id, request->entry_id);
      if (result.has_value()) {
        emissions = std::move(*result);
      } else {
        failure = result.status();
      }
    }
  }
  if (!failure.ok()) {
    // Claiming references one does not hold is a protocol violation, full
    // stop: answer, then cut the session.
    violate(session, failure.code(), failure.detail());
    return;
  }
  enqueue(session, incr ? wire::kIncrRef : wire::kDecrRef, {});
  route(emissions);
}

void BrokerDaemon::on_baseline_publish(Session & session, const wire::Frame & frame)
{
  auto request = wire::decode_baseline_publish(frame.payload);
  if (!request.has_value()) {
    violate(session, Errc::protocol_error, "malformed baseline publish");
    return;
  }
  Status failure;
  std::vector<Emission> emissions;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto result = core_.baseline_publish(
      session.client, request->publisher_id, std::move(request->payload));
    if (result.has_value()) {
      emissions = std::move(*result);
    } else {
      failure = result.status();
    }
  }
  if (!failure.ok()) {
    enqueue(session, wire::kError, wire::encode_error(failure.code(), failure.detail()));
    if (fatal_code(failure.code())) {
      session.doomed = true;
    }
    return;
  }
  enqueue(session, wire::kBaselinePublish, {});
  route(emissions);
}

std::string BrokerDaemon::debug_dump() const
{
  std::lock_guard<std::mutex> lock(mu_);
  return core_.debug_dump();
}

}  // namespace zerocast::broker
