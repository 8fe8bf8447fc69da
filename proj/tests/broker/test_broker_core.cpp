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

#include <optional>
#include <string>
#include <vector>

#include "doctest.h"
#include "zerocast/broker_core.hpp"

using namespace zerocast;
using namespace zerocast::broker;

namespace
{

constexpr uint64_t kPool = 0x7a0000000000ULL;
constexpr uint64_t kCap = 64ULL << 20;

std::optional<EntrySnapshot> find_entry(
  const BrokerCore & core, uint64_t publisher_id, uint64_t entry_id)
{
  for (const auto & e : core.entries()) {
    if (e.publisher_id == publisher_id && e.entry_id == entry_id) {
      return e;
    }
  }
  return std::nullopt;
}

uint64_t ref_count(const EntrySnapshot & e)
{
  uint64_t sum = 0;
  for (const auto & [h, n] : e.holders) {
    sum += n;
  }
  return sum;
}

// Registers, publishes, and commits to every pending subscriber, returning
// the entry id — the daemon's synchronous-delivery behavior in one call.
uint64_t publish_all(BrokerCore & core, uint64_t client, uint64_t pub, uint64_t addr)
{
  auto res = core.publish_entry(client, pub, addr);
  REQUIRE(res.has_value());
  for (uint64_t sub : res->pending) {
    REQUIRE(core.commit_delivery(pub, res->entry_id, sub).has_value());
  }
  return res->entry_id;
}

}  // namespace

TEST_SUITE("broker_core")
{

TEST_CASE("arena slots are deterministic and per process")
{
  BrokerCore core;

  // First zero-copy publisher: slot 0, named after its process.
  auto p1 = core.register_publisher(1, 100, wire::kTransportZeroCopy, "a");
  REQUIRE(p1.has_value());
  CHECK(p1->arena.base == kPool);
  CHECK(p1->arena.capacity == kCap);
  CHECK(p1->arena.name == "zerocast.100");
  CHECK(p1->subscriber_count == 0);

  // Second distinct process: one stride (2x capacity) further.
  auto p2 = core.register_publisher(2, 200, wire::kTransportZeroCopy, "a");
  REQUIRE(p2.has_value());
  CHECK(p2->arena.base == kPool + 2 * kCap);

  // Same process again, different topic: the same arena, no new slot.
  auto p3 = core.register_publisher(1, 100, wire::kTransportZeroCopy, "b");
  REQUIRE(p3.has_value());
  CHECK(p3->arena.base == p1->arena.base);
  CHECK(p3->arena.name == p1->arena.name);

  auto p4 = core.register_publisher(3, 300, wire::kTransportZeroCopy, "a");
  REQUIRE(p4.has_value());
  CHECK(p4->arena.base == kPool + 4 * kCap);
}

TEST_CASE("one arena per process means one owning connection")
{
  BrokerCore core;
  REQUIRE(core.register_publisher(1, 100, wire::kTransportZeroCopy, "a").has_value());
  auto clash = core.register_publisher(9, 100, wire::kTransportZeroCopy, "b");
  REQUIRE(!clash.has_value());
  CHECK(clash.status().code() == Errc::arena_conflict);
}

TEST_CASE("publisher registration announces the arena to current subscribers")
{
  BrokerCore core;
  auto s1 = core.register_subscriber(1, 11, wire::kTransportZeroCopy, "t");
  auto s2 = core.register_subscriber(2, 12, wire::kTransportZeroCopy, "t");
  auto sb = core.register_subscriber(3, 13, wire::kTransportBaseline, "t");
  REQUIRE(s1.has_value());
  REQUIRE(s2.has_value());
  REQUIRE(sb.has_value());

  auto pub = core.register_publisher(4, 14, wire::kTransportZeroCopy, "t");
  REQUIRE(pub.has_value());
  CHECK(pub->subscriber_count == 2);  // baseline subscriber not counted
  REQUIRE(pub->emissions.size() == 2);
  const auto & a0 = std::get<AnnounceEmission>(pub->emissions[0]);
  const auto & a1 = std::get<AnnounceEmission>(pub->emissions[1]);
  CHECK(a0.msg.subscriber_id == s1->subscriber_id);
  CHECK(a1.msg.subscriber_id == s2->subscriber_id);
  CHECK(a0.msg.arena.name == "zerocast.14");
}

TEST_CASE("subscriber registration returns live arenas once per process")
{
  BrokerCore core;
  REQUIRE(core.register_publisher(1, 100, wire::kTransportZeroCopy, "t").has_value());
  REQUIRE(core.register_publisher(1, 100, wire::kTransportZeroCopy, "t").has_value());
  REQUIRE(core.register_publisher(2, 200, wire::kTransportZeroCopy, "t").has_value());

  auto sub = core.register_subscriber(3, 300, wire::kTransportZeroCopy, "t");
  REQUIRE(sub.has_value());
  REQUIRE(sub->arenas.size() == 2);  // two processes, three publishers
  CHECK(sub->arenas[0].name == "zerocast.100");
  CHECK(sub->arenas[1].name == "zerocast.200");

  auto empty = core.register_subscriber(3, 300, wire::kTransportZeroCopy, "empty");
  REQUIRE(empty.has_value());
  CHECK(empty->arenas.empty());
}

TEST_CASE("publish snapshots the subscriber set and commits credit references")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  auto s1 = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
  auto s2 = core.register_subscriber(3, 300, wire::kTransportZeroCopy, "t");
  REQUIRE(pub.has_value());

  auto res = core.publish_entry(1, pub->publisher_id, kPool + 80);
  REQUIRE(res.has_value());
  CHECK(res->entry_id == 1);
  REQUIRE(res->pending.size() == 2);
  CHECK(res->emissions.empty());

  {
    auto snap = find_entry(core, pub->publisher_id, 1);
    REQUIRE(snap.has_value());
    CHECK(snap->pending.size() == 2);
    CHECK(ref_count(*snap) == 0);
  }

  for (uint64_t sub : res->pending) {
    auto emission = core.commit_delivery(pub->publisher_id, 1, sub);
    REQUIRE(emission.has_value());
    const auto & d = std::get<DeliveryEmission>(*emission);
    CHECK(d.msg.subscriber_id == sub);
    CHECK(d.msg.address == kPool + 80);
    CHECK(d.msg.arena_name == "zerocast.100");
  }

  auto snap = find_entry(core, pub->publisher_id, 1);
  REQUIRE(snap.has_value());
  CHECK(snap->pending.empty());
  CHECK(snap->delivered.size() == 2);
  CHECK(ref_count(*snap) == 2);
  CHECK(snap->holders.at(s1->subscriber_id) == 1);
  CHECK(snap->holders.at(s2->subscriber_id) == 1);
}

TEST_CASE("publishing to nobody reclaims immediately")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  REQUIRE(pub.has_value());

  auto res = core.publish_entry(1, pub->publisher_id, kPool + 80);
  REQUIRE(res.has_value());
  CHECK(res->pending.empty());
  REQUIRE(res->emissions.size() == 1);
  const auto & r = std::get<ReclaimEmission>(res->emissions[0]);
  CHECK(r.msg.publisher_id == pub->publisher_id);
  CHECK(r.msg.entry_id == res->entry_id);
  CHECK(core.entries().empty());
}

TEST_CASE("late subscribers never see earlier entries")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  REQUIRE(pub.has_value());
  REQUIRE(core.publish_entry(1, pub->publisher_id, kPool + 80).has_value());

  auto sub = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
  REQUIRE(sub.has_value());
  CHECK(core.entries().empty());  // entry was reclaimed; nothing in flight

  auto res = core.publish_entry(1, pub->publisher_id, kPool + 160);
  REQUIRE(res.has_value());
  CHECK(res->entry_id == 2);  // ids keep rising across reclaimed entries
  CHECK(res->pending == std::vector<uint64_t>{sub->subscriber_id});
}

TEST_CASE("addresses outside the arena are rejected")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  REQUIRE(pub.has_value());

  for (uint64_t bad : {kPool - 1, kPool + kCap, uint64_t{0}}) {
    auto res = core.publish_entry(1, pub->publisher_id, bad);
    REQUIRE(!res.has_value());
    CHECK(res.status().code() == Errc::address_out_of_arena);
  }
  CHECK(core.entries().empty());
}

TEST_CASE("a full queue refuses new entries until one is reclaimed")
{
  Options options;
  options.queue_capacity = 4;
  BrokerCore core(options);
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  auto sub = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
  REQUIRE(pub.has_value());
  REQUIRE(sub.has_value());

  for (int i = 0; i < 4; ++i) {
    publish_all(core, 1, pub->publisher_id, kPool + 80);
  }
  auto full = core.publish_entry(1, pub->publisher_id, kPool + 80);
  REQUIRE(!full.has_value());
  CHECK(full.status().code() == Errc::queue_full);

  // Subscriber drops entry 1 -> one slot frees up.
  auto drop = core.decr_ref(2, sub->subscriber_id, pub->publisher_id, 1);
  REQUIRE(drop.has_value());
  REQUIRE(drop->size() == 1);
  CHECK(core.publish_entry(1, pub->publisher_id, kPool + 80).has_value());
}

TEST_CASE("clone and drop move the reference count both ways")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  auto sub = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
  REQUIRE(pub.has_value());
  REQUIRE(sub.has_value());
  const uint64_t entry = publish_all(core, 1, pub->publisher_id, kPool + 80);

  REQUIRE(core.incr_ref(2, sub->subscriber_id, pub->publisher_id, entry).ok());
  CHECK(ref_count(*find_entry(core, pub->publisher_id, entry)) == 2);

  auto drop = core.decr_ref(2, sub->subscriber_id, pub->publisher_id, entry);
  REQUIRE(drop.has_value());
  CHECK(drop->empty());  // one of two refs: no reclaim
  CHECK(ref_count(*find_entry(core, pub->publisher_id, entry)) == 1);

  auto last = core.decr_ref(2, sub->subscriber_id, pub->publisher_id, entry);
  REQUIRE(last.has_value());
  REQUIRE(last->size() == 1);
  CHECK(std::get<ReclaimEmission>((*last)[0]).msg.entry_id == entry);
  CHECK(core.entries().empty());
}

TEST_CASE("only credited holders may touch the count")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  auto sub = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
  auto lurker = core.register_subscriber(3, 300, wire::kTransportZeroCopy, "other");
  REQUIRE(lurker.has_value());
  const uint64_t entry = publish_all(core, 1, pub->publisher_id, kPool + 80);

  // Registered endpoint, but holds no credit on this entry.
  CHECK(
    core.incr_ref(3, lurker->subscriber_id, pub->publisher_id, entry).code() ==
    Errc::not_holder);
  // Endpoint id claimed through the wrong connection.
  CHECK(
    core.incr_ref(3, sub->subscriber_id, pub->publisher_id, entry).code() ==
    Errc::protocol_error);
  // Unknown entry.
  CHECK(
    core.incr_ref(2, sub->subscriber_id, pub->publisher_id, 999).code() ==
    Errc::unknown_entry);

  CHECK(ref_count(*find_entry(core, pub->publisher_id, entry)) == 1);
}

TEST_CASE("no reclaim while a subscriber is still owed the entry")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  auto s1 = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
  auto s2 = core.register_subscriber(3, 300, wire::kTransportZeroCopy, "t");
  REQUIRE(s2.has_value());

  auto res = core.publish_entry(1, pub->publisher_id, kPool + 80);
  REQUIRE(res.has_value());
  // Deliver to s1 only; s2 stays pending.
  REQUIRE(core.commit_delivery(pub->publisher_id, res->entry_id, s1->subscriber_id).has_value());

  // s1 drops: references hit zero, but the entry must stay for s2.
  auto drop = core.decr_ref(2, s1->subscriber_id, pub->publisher_id, res->entry_id);
  REQUIRE(drop.has_value());
  CHECK(drop->empty());
  auto snap = find_entry(core, pub->publisher_id, res->entry_id);
  REQUIRE(snap.has_value());
  CHECK(ref_count(*snap) == 0);
  CHECK(snap->pending == std::vector<uint64_t>{s2->subscriber_id});

  // s2 receives and drops: now it goes.
  REQUIRE(core.commit_delivery(pub->publisher_id, res->entry_id, s2->subscriber_id).has_value());
  auto last = core.decr_ref(3, s2->subscriber_id, pub->publisher_id, res->entry_id);
  REQUIRE(last.has_value());
  CHECK(last->size() == 1);
  CHECK(core.entries().empty());
}

TEST_CASE("a dying holder settles its entries")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  auto sub = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
  REQUIRE(sub.has_value());
  const uint64_t entry = publish_all(core, 1, pub->publisher_id, kPool + 80);

  auto emissions = core.process_exit(2);
  REQUIRE(emissions.size() == 1);
  const auto & r = std::get<ReclaimEmission>(emissions[0]);
  CHECK(r.msg.publisher_id == pub->publisher_id);
  CHECK(r.msg.entry_id == entry);
  CHECK(core.entries().empty());

  CHECK(core.process_exit(2).empty());  // idempotent
}

TEST_CASE("a dying undelivered subscriber stops blocking reclaim")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  auto s1 = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
  auto s2 = core.register_subscriber(3, 300, wire::kTransportZeroCopy, "t");
  REQUIRE(s2.has_value());

  auto res = core.publish_entry(1, pub->publisher_id, kPool + 80);
  REQUIRE(res.has_value());
  REQUIRE(core.commit_delivery(pub->publisher_id, res->entry_id, s1->subscriber_id).has_value());

  // The undelivered subscriber dies: its pending slot is forgotten.
  CHECK(core.process_exit(3).empty());
  auto snap = find_entry(core, pub->publisher_id, res->entry_id);
  REQUIRE(snap.has_value());
  CHECK(snap->pending.empty());
  CHECK(ref_count(*snap) == 1);

  // Now the one delivered holder dropping is enough.
  auto drop = core.decr_ref(2, s1->subscriber_id, pub->publisher_id, res->entry_id);
  REQUIRE(drop.has_value());
  CHECK(drop->size() == 1);
}

TEST_CASE("a dead publisher's messages outlive it while held")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  auto sub = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
  REQUIRE(sub.has_value());
  const uint64_t entry = publish_all(core, 1, pub->publisher_id, kPool + 80);

  auto emissions = core.process_exit(1);
  // No reclaim notice (the holder lives); the arena object is unlinked so
  // the name frees up, while the subscriber's mapping keeps the bytes alive.
  REQUIRE(emissions.size() == 1);
  CHECK(std::get<UnlinkArenaEmission>(emissions[0]).arena_name == "zerocast.100");
  REQUIRE(core.entries().size() == 1);

  // The holder drops: the record is discarded silently (no one to notify).
  auto drop = core.decr_ref(2, sub->subscriber_id, pub->publisher_id, entry);
  REQUIRE(drop.has_value());
  CHECK(drop->empty());
  CHECK(core.entries().empty());
}

TEST_CASE("a dead publisher's undelivered sends are dropped")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  auto sub = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
  REQUIRE(sub.has_value());

  auto res = core.publish_entry(1, pub->publisher_id, kPool + 80);
  REQUIRE(res.has_value());
  // Publisher dies before the delivery is committed.
  auto emissions = core.process_exit(1);
  REQUIRE(emissions.size() == 1);
  CHECK(std::holds_alternative<UnlinkArenaEmission>(emissions[0]));
  CHECK(core.entries().empty());

  auto commit = core.commit_delivery(pub->publisher_id, res->entry_id, sub->subscriber_id);
  CHECK(!commit.has_value());
}

TEST_CASE("abandoning a delivery can settle the entry")
{
  BrokerCore core;
  auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
  auto sub = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");

  auto res = core.publish_entry(1, pub->publisher_id, kPool + 80);
  REQUIRE(res.has_value());
  auto out = core.abandon_delivery(pub->publisher_id, res->entry_id, sub->subscriber_id);
  REQUIRE(out.has_value());
  REQUIRE(out->size() == 1);
  CHECK(std::get<ReclaimEmission>((*out)[0]).msg.entry_id == res->entry_id);

  // The slot cannot be committed afterwards.
  CHECK(!core.commit_delivery(pub->publisher_id, res->entry_id, sub->subscriber_id).has_value());
}

TEST_CASE("baseline publishes copy to baseline subscribers only")
{
  BrokerCore core;
  auto p1 = core.register_publisher(1, 100, wire::kTransportBaseline, "t");
  auto p2 = core.register_publisher(2, 200, wire::kTransportBaseline, "t");
  auto sub = core.register_subscriber(3, 300, wire::kTransportBaseline, "t");
  auto zc = core.register_subscriber(4, 400, wire::kTransportZeroCopy, "t");
  REQUIRE(p1.has_value());
  CHECK(p1->arena.name.empty());
  REQUIRE(zc.has_value());

  const std::vector<uint8_t> payload(1024, 0xAB);
  auto out1 = core.baseline_publish(1, p1->publisher_id, payload);
  auto out2 = core.baseline_publish(2, p2->publisher_id, payload);
  REQUIRE(out1.has_value());
  REQUIRE(out2.has_value());
  REQUIRE(out1->size() == 1);
  REQUIRE(out2->size() == 1);

  const auto & d1 = std::get<BaselineDeliveryEmission>((*out1)[0]);
  const auto & d2 = std::get<BaselineDeliveryEmission>((*out2)[0]);
  CHECK(d1.msg.subscriber_id == sub->subscriber_id);
  CHECK(d1.msg.payload == payload);
  CHECK(d1.msg.origin_id == p1->publisher_id);
  CHECK(d2.msg.origin_id == p2->publisher_id);
  CHECK(d1.msg.origin_id != d2.msg.origin_id);
}

TEST_CASE("baseline publishes respect the size cap and topic emptiness")
{
  Options options;
  options.max_baseline_bytes = 128;
  BrokerCore core(options);
  auto pub = core.register_publisher(1, 100, wire::kTransportBaseline, "t");
  REQUIRE(pub.has_value());

  auto none = core.baseline_publish(1, pub->publisher_id, std::vector<uint8_t>(16));
  REQUIRE(none.has_value());
  CHECK(none->empty());

  auto big = core.baseline_publish(1, pub->publisher_id, std::vector<uint8_t>(129));
  REQUIRE(!big.has_value());
  CHECK(big.status().code() == Errc::payload_too_large);
}

TEST_CASE("the state dump is deterministic")
{
  auto run = [] {
      BrokerCore core;
      auto pub = core.register_publisher(1, 100, wire::kTransportZeroCopy, "t");
      auto sub = core.register_subscriber(2, 200, wire::kTransportZeroCopy, "t");
      REQUIRE(sub.has_value());
      publish_all(core, 1, pub->publisher_id, kPool + 80);
      publish_all(core, 1, pub->publisher_id, kPool + 160);
      core.register_publisher(3, 300, wire::kTransportBaseline, "u");
      return core.debug_dump();
    };
  const std::string a = run();
  const std::string b = run();
  CHECK(a == b);
  CHECK(!a.empty());
}

}  // TEST_SUITE("broker_core")
