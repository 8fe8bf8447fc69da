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

#ifndef ZEROCAST__CLIENT_HPP_
#define ZEROCAST__CLIENT_HPP_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "zerocast/arena.hpp"
#include "zerocast/schema.hpp"
#include "zerocast/status.hpp"
#include "zerocast/wire.hpp"

namespace zerocast
{

class Context;
class Publisher;
class Subscription;
class BaselinePublisher;
class BaselineSubscription;
class ExclusiveHandle;
class SharedHandle;

namespace detail
{
struct PubState;
struct SubState;
struct BaselineSubState;
struct Pending;
}  // namespace detail

/// A read-only, reference-counted view of a published message.
///
/// Copying clones the handle (one more broker-side credit), destruction drops
/// it; the last drop lets the publisher reclaim the memory. The handle pins
/// the arena mapping, so the bytes stay readable even if the subscription,
/// the context, or the publishing process goes away first.
class SharedHandle
{
public:
  SharedHandle() = default;
  SharedHandle(const SharedHandle & other);
  SharedHandle & operator=(const SharedHandle & other);
  SharedHandle(SharedHandle && other) noexcept;
  SharedHandle & operator=(SharedHandle && other) noexcept;
  ~SharedHandle();

  explicit operator bool() const {return address_ != 0;}
  const uint8_t * root() const {return reinterpret_cast<const uint8_t *>(address_);}
  uint64_t address() const {return address_;}
  uint64_t publisher_id() const {return publisher_id_;}
  uint64_t entry_id() const {return entry_id_;}

private:
  friend class Context;
  SharedHandle(
    std::weak_ptr<Context> context, std::shared_ptr<void> keepalive,
    uint64_t holder_id, uint64_t publisher_id, uint64_t entry_id, uint64_t address);

  void drop();

  std::weak_ptr<Context> context_;
  std::shared_ptr<void> keepalive_;
  uint64_t holder_id_{0};
  uint64_t publisher_id_{0};
  uint64_t entry_id_{0};
  uint64_t address_{0};
};

/// The writable, single-owner handle to a not-yet-published message.
///
/// Only its publisher can create one; publish() consumes it. A handle
/// abandoned without publishing returns its memory to the arena.
class ExclusiveHandle
{
public:
  ExclusiveHandle() = default;
  ExclusiveHandle(const ExclusiveHandle &) = delete;
  ExclusiveHandle & operator=(const ExclusiveHandle &) = delete;
  ExclusiveHandle(ExclusiveHandle && other) noexcept;
  ExclusiveHandle & operator=(ExclusiveHandle && other) noexcept;
  ~ExclusiveHandle();

  explicit operator bool() const {return address_ != 0;}
  uint64_t address() const {return address_;}
  uint8_t * root() {return reinterpret_cast<uint8_t *>(address_);}
  const uint8_t * root() const {return reinterpret_cast<const uint8_t *>(address_);}
  const MessageSchema & schema() const;

  /// Appends one element to sequence `seq_index`, growing the backing buffer
  /// (0 -> 4 elements, then doubling) through the arena as needed. On
  /// failure the message is untouched at its previous length.
  Status seq_push(size_t seq_index, const void * element);

  /// Appends `count` elements in one go, with the same growth rule.
  Status seq_append(size_t seq_index, const void * elements, uint64_t count);

private:
  friend class Publisher;
  ExclusiveHandle(std::shared_ptr<detail::PubState> pub, uint64_t address);

  void discard();

  std::shared_ptr<detail::PubState> pub_;
  uint64_t address_{0};
};

/// Zero-copy publisher endpoint for one topic.
class Publisher
{
public:
  ~Publisher() = default;
  Publisher(const Publisher &) = delete;
  Publisher & operator=(const Publisher &) = delete;

  uint64_t id() const;
  const std::string & topic() const;
  const MessageSchema & schema() const;

  /// Allocates a message root in the arena; sequences start empty.
  Result<ExclusiveHandle> allocate();

  /// Hands the message to the broker. On success the handle is consumed and
  /// the memory is owned by the entry until its reclaim notice arrives; on
  /// failure (e.g. a full queue) the handle remains valid and re-publishable.
  Result<uint64_t> publish(ExclusiveHandle && message);

  /// Allocator stats of the underlying arena (reclaim tests, monitoring).
  ArenaStats arena_stats() const;

private:
  friend class Context;
  Publisher(std::shared_ptr<Context> context, std::shared_ptr<detail::PubState> state);

  std::shared_ptr<Context> context_;
  std::shared_ptr<detail::PubState> state_;
};

/// Zero-copy subscription: the callback runs on the context's dispatch
/// thread, once per delivery, in per-publisher entry id order. Retaining the
/// message beyond the callback requires copying the handle.
class Subscription
{
public:
  using Callback = std::function<void (const SharedHandle &)>;

  ~Subscription();
  Subscription(const Subscription &) = delete;
  Subscription & operator=(const Subscription &) = delete;

  uint64_t id() const;
  const std::string & topic() const;

  /// Deliveries that could not be dispatched (arena attach failed, decode
  /// failed). Never silently dropped: each one is also logged.
  uint64_t delivery_errors() const;

private:
  friend class Context;
  Subscription(std::shared_ptr<Context> context, std::shared_ptr<detail::SubState> state);

  std::shared_ptr<Context> context_;
  std::shared_ptr<detail::SubState> state_;
};

/// Copy-based publisher: messages are serialized and shipped through the
/// broker byte-for-byte (the conventional-middleware comparison arm).
class BaselinePublisher
{
public:
  BaselinePublisher(const BaselinePublisher &) = delete;
  BaselinePublisher & operator=(const BaselinePublisher &) = delete;

  uint64_t id() const {return id_;}
  const std::string & topic() const {return topic_;}

  /// Serializes `root` per the schema and publishes the bytes.
  Status publish(const void * root);

  /// Publishes pre-serialized bytes.
  Status publish_bytes(std::vector<uint8_t> bytes);

private:
  friend class Context;
  BaselinePublisher(
    std::shared_ptr<Context> context, uint64_t id, std::string topic,
    const MessageSchema * schema);

  std::shared_ptr<Context> context_;
  uint64_t id_{0};
  std::string topic_;
  const MessageSchema * schema_;
};

/// Copy-based subscription: every delivery is deserialized into a heap
/// message and handed to the callback together with the origin endpoint id.
class BaselineSubscription
{
public:
  using Callback = std::function<void (const HeapMessage &, uint64_t origin_id)>;

  ~BaselineSubscription();
  BaselineSubscription(const BaselineSubscription &) = delete;
  BaselineSubscription & operator=(const BaselineSubscription &) = delete;

  uint64_t id() const;
  uint64_t delivery_errors() const;

private:
  friend class Context;
  BaselineSubscription(
    std::shared_ptr<Context> context, std::shared_ptr<detail::BaselineSubState> state);

  std::shared_ptr<Context> context_;
  std::shared_ptr<detail::BaselineSubState> state_;
};

/// One broker session plus the dispatch thread that serves it.
///
/// Use one Context per process: the broker assigns each process a single
/// arena, owned by the connection that first registers a zero-copy publisher.
/// Endpoints created from the context share its session and dispatch thread.
///
/// Blocking calls (create_*, publish) must not be made from inside callbacks;
/// handle clone/drop is safe anywhere.
class Context : public std::enable_shared_from_this<Context>
{
public:
  ~Context();
  Context(const Context &) = delete;
  Context & operator=(const Context &) = delete;

  /// Connects to the broker at `broker_path` (empty: $ZEROCAST_BROKER, then
  /// the default path). Fails outright if the broker is unreachable.
  static Result<std::shared_ptr<Context>> connect(const std::string & broker_path = "");

  // The schema passed to any create_* call must outlive the endpoint (the
  // built-in schemas have static storage and always qualify).

  Result<std::shared_ptr<Publisher>> create_publisher(
    const std::string & topic, const MessageSchema & schema);

  Result<std::shared_ptr<Subscription>> create_subscription(
    const std::string & topic, const MessageSchema & schema, Subscription::Callback callback);

  Result<std::shared_ptr<BaselinePublisher>> create_baseline_publisher(
    const std::string & topic, const MessageSchema & schema);

  Result<std::shared_ptr<BaselineSubscription>> create_baseline_subscription(
    const std::string & topic, const MessageSchema & schema,
    BaselineSubscription::Callback callback);

  /// True until the broker session is lost.
  bool alive() const {return !dead_.load();}

private:
  friend class Publisher;
  friend class Subscription;
  friend class BaselinePublisher;
  friend class BaselineSubscription;
  friend class SharedHandle;
  friend class ExclusiveHandle;

  Context() = default;

  Status open(const std::string & broker_path);
  void dispatch_loop();
  void handle_async(const wire::Frame & frame);
  void on_delivery(const wire::Delivery & delivery);
  void on_reclaim(const wire::ReclaimNotice & notice);
  void on_announce(const wire::ArenaAnnounce & announce);
  void on_baseline_delivery(const wire::BaselineDelivery & delivery);
  void fail_all_pending();

  /// Sends a frame and blocks for its reply; returns the error status if the
  /// broker answered with an error frame.
  Result<wire::Frame> request(uint8_t opcode, const std::vector<uint8_t> & payload);

  /// Fire-and-forget send whose eventual ack is consumed by the dispatch
  /// thread; used for clone/drop so callbacks can issue them re-entrantly.
  void post(uint8_t opcode, const std::vector<uint8_t> & payload);

  void post_ref(bool incr, uint64_t holder, uint64_t publisher, uint64_t entry);

  bool send_locked(const std::vector<uint8_t> & bytes);

  /// Ensures the process arena exists (first zero-copy publisher creates it).
  Status ensure_arena(const wire::ArenaInfo & info);

  /// Attaches a publisher arena read-only; a second attach of the same name
  /// is free, and this process's own arena resolves to its writable mapping.
  /// An attach that fails because the owner has not created the object yet
  /// is retried on first use.
  void attach_arena(const wire::ArenaInfo & info);

  /// Mapping keepalive for an address in `arena_name`; null if unattached.
  std::shared_ptr<void> resolve_keepalive(const std::string & arena_name);

  int fd_{-1};
  std::atomic<bool> dead_{false};
  std::thread dispatcher_;
  std::thread::id dispatcher_id_;

  std::mutex send_mu_;
  std::deque<std::shared_ptr<detail::Pending>> pending_;

  std::mutex state_mu_;  // arena, views, endpoint routing
  std::shared_ptr<Arena> arena_;
  std::map<std::string, wire::ArenaInfo> known_arenas_;
  // Mappings this context uses. An arena is mapped once per *process*, so
  // entries may alias a mapping owned by another context (see the process-
  // wide registry in the implementation); the type is erased accordingly.
  std::map<std::string, std::shared_ptr<void>> views_;
  std::map<uint64_t, std::shared_ptr<detail::PubState>> publishers_;
  std::map<uint64_t, std::shared_ptr<detail::SubState>> subscriptions_;
  std::map<uint64_t, std::shared_ptr<detail::BaselineSubState>> baseline_subs_;
};

}  // namespace zerocast

#endif  // ZEROCAST__CLIENT_HPP_
