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

#ifndef ZEROCAST__BROKER_CORE_HPP_
#define ZEROCAST__BROKER_CORE_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "zerocast/status.hpp"
#include "zerocast/wire.hpp"

namespace zerocast::broker
{

/// Broker tuning. Arena slots are handed out at `pool_start` with a stride
/// of twice the arena capacity, so slots can never touch.
struct Options
{
  uint64_t pool_start{0x7a0000000000ULL};
  uint64_t arena_capacity{64ULL << 20};
  uint32_t queue_capacity{16};
  uint64_t max_baseline_bytes{16ULL << 20};
};

// ---------------------------------------------------------------------------
// Emissions: side effects the I/O layer must carry out, in order. The core
// itself never touches a socket or the filesystem.

struct DeliveryEmission
{
  wire::Delivery msg;  // to msg.subscriber_id
};

struct ReclaimEmission
{
  wire::ReclaimNotice msg;  // to msg.publisher_id (emitted only while it lives)
};

struct AnnounceEmission
{
  wire::ArenaAnnounce msg;  // to msg.subscriber_id
};

struct BaselineDeliveryEmission
{
  wire::BaselineDelivery msg;  // to msg.subscriber_id
};

struct UnlinkArenaEmission
{
  std::string arena_name;  // owner died: unlink the shared-memory object
};

using Emission = std::variant<
  DeliveryEmission, ReclaimEmission, AnnounceEmission, BaselineDeliveryEmission,
  UnlinkArenaEmission>;

/// Test/debug view of one live queue entry.
struct EntrySnapshot
{
  uint64_t publisher_id{0};
  uint64_t entry_id{0};
  uint64_t address{0};
  std::vector<uint64_t> pending;    // subscribers not yet sent this entry
  std::vector<uint64_t> delivered;  // subscribers the entry was committed to
  std::map<uint64_t, uint32_t> holders;  // endpoint id -> credited references
};

/// The broker's entire pub/sub state machine, free of any I/O.
///
/// Every mutation is a single call that either applies completely or returns
/// an error leaving the state untouched; the daemon obtains atomicity by
/// applying calls one at a time. Clients are identified by an opaque id the
/// caller assigns per connection; endpoints registered through a connection
/// die with it.
///
/// An entry's lifetime follows two counters: credited references and
/// subscribers still owed a delivery. The entry is reclaimed exactly when
/// both reach zero, and the owning publisher is then told to reuse the
/// memory. Delivery is two-phase: publish_entry snapshots the subscriber
/// set, and each commit_delivery moves one subscriber from pending to
/// delivered while crediting it a reference, so a crash between the two
/// phases is indistinguishable from the subscriber never having been sent
/// the entry.
class BrokerCore
{
public:
  explicit BrokerCore(Options options = {});

  struct RegisterPublisherResult
  {
    uint64_t publisher_id{0};
    uint32_t subscriber_count{0};  // current same-transport subscribers
    wire::ArenaInfo arena;         // empty name for baseline publishers
    std::vector<Emission> emissions;
  };

  /// Registers a publisher endpoint. For zero-copy publishers the broker
  /// assigns the process arena slot (one per client, reused across topics)
  /// and announces it to the topic's current subscribers.
  Result<RegisterPublisherResult> register_publisher(
    uint64_t client, uint64_t pid, uint8_t transport, const std::string & topic);

  struct RegisterSubscriberResult
  {
    uint64_t subscriber_id{0};
    std::vector<wire::ArenaInfo> arenas;  // live publisher arenas to attach
  };

  /// Registers a subscriber endpoint. Entries published before registration
  /// are never delivered to it.
  Result<RegisterSubscriberResult> register_subscriber(
    uint64_t client, uint64_t pid, uint8_t transport, const std::string & topic);

  struct PublishResult
  {
    uint64_t entry_id{0};
    std::vector<uint64_t> pending;  // subscribers to commit, registration order
    std::vector<Emission> emissions;
  };

  /// Creates a queue entry for a message at `address` in the publisher's
  /// arena. The subscriber set is snapshotted here; the caller then commits
  /// one delivery per pending subscriber. With no subscribers the entry is
  /// immediately reclaimed.
  Result<PublishResult> publish_entry(uint64_t client, uint64_t publisher_id, uint64_t address);

  /// Commits one pending delivery: marks the subscriber delivered, credits
  /// it one reference, and returns the frame to send.
  Result<Emission> commit_delivery(
    uint64_t publisher_id, uint64_t entry_id, uint64_t subscriber_id);

  /// A pending delivery that can no longer be sent (the subscriber's session
  /// died between snapshot and commit). May reclaim the entry.
  Result<std::vector<Emission>> abandon_delivery(
    uint64_t publisher_id, uint64_t entry_id, uint64_t subscriber_id);

  /// Credits one more reference to `holder` (a clone). The holder must
  /// already be credited; anything else is a protocol violation and the
  /// caller should terminate the session.
  Status incr_ref(uint64_t client, uint64_t holder_id, uint64_t publisher_id, uint64_t entry_id);

  /// Removes one credited reference. Reclaims the entry when both counters
  /// reach zero.
  Result<std::vector<Emission>> decr_ref(
    uint64_t client, uint64_t holder_id, uint64_t publisher_id, uint64_t entry_id);

  /// Copies `payload` to every live baseline subscriber of the topic.
  Result<std::vector<Emission>> baseline_publish(
    uint64_t client, uint64_t publisher_id, std::vector<uint8_t> payload);

  /// Removes every endpoint of `client` and settles all affected entries, as
  /// if the client had dropped all handles and deregistered. Idempotent.
  std::vector<Emission> process_exit(uint64_t client);

  // -- Introspection (tests, logging) --------------------------------------

  /// Deterministic rendering of the complete broker state.
  std::string debug_dump() const;

  /// All live entries, ordered by (publisher_id, entry_id).
  std::vector<EntrySnapshot> entries() const;

  const Options & options() const {return options_;}

private:
  struct QueueEntry
  {
    uint64_t entry_id{0};
    uint64_t address{0};
    uint64_t published_at_ns{0};
    std::set<uint64_t> pending;
    std::set<uint64_t> delivered;
    std::map<uint64_t, uint32_t> holders;

    uint64_t ref_count() const
    {
      uint64_t sum = 0;
      for (const auto & [id, n] : holders) {
        sum += n;
      }
      return sum;
    }
  };

  struct Endpoint
  {
    uint64_t id{0};
    uint64_t client{0};
    uint64_t pid{0};
    uint8_t transport{wire::kTransportZeroCopy};
    bool is_publisher{false};
    bool alive{true};
    std::string topic;

    // Publisher-only state.
    wire::ArenaInfo arena;
    uint64_t next_entry_id{1};
    std::vector<QueueEntry> queue;
  };

  struct Topic
  {
    std::vector<uint64_t> publishers;  // registration order, includes dead
    std::vector<uint64_t> subscribers;
  };

  struct ArenaSlot
  {
    wire::ArenaInfo info;
    uint64_t owner_client{0};
  };

  Endpoint * find_endpoint(uint64_t id);
  Endpoint * find_publisher(uint64_t id);
  QueueEntry * find_entry(Endpoint & pub, uint64_t entry_id);

  /// Drops the entry if both counters are zero; appends the reclaim notice
  /// when the publisher is still alive.
  void settle_entry(Endpoint & pub, uint64_t entry_id, std::vector<Emission> & out);

  Options options_;
  uint64_t next_id_{1};
  uint64_t next_slot_{0};
  std::map<uint64_t, Endpoint> endpoints_;
  std::map<std::string, Topic> topics_;
  std::map<uint64_t, ArenaSlot> arenas_;  // keyed by pid
};

}  // namespace zerocast::broker

#endif  // ZEROCAST__BROKER_CORE_HPP_
