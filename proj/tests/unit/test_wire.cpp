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

#include <cstdlib>
#include <random>
#include <vector>

#include "doctest.h"
#include "zerocast/wire.hpp"

using namespace zerocast;
using namespace zerocast::wire;

namespace
{

/// Runs one encoded frame through the parser and hands back the frame.
Frame reparse(const std::vector<uint8_t> & encoded)
{
  FrameParser parser;
  parser.feed(encoded.data(), encoded.size());
  auto frame = parser.next();
  REQUIRE(frame.has_value());
  REQUIRE(!parser.violated());
  return *frame;
}

}  // namespace

TEST_SUITE("wire")
{

TEST_CASE("frames carry a little-endian length that counts the opcode")
{
  PublishRequest req;
  req.publisher_id = 1;
  req.address = 0x7a0000000040ULL;
  const auto bytes = encode_frame(kPublishEntry, encode(req));

  const std::vector<uint8_t> expected = {
    0x11, 0x00, 0x00, 0x00,                          // length = 1 + 16
    0x03,                                            // opcode
    0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // publisher_id
    0x40, 0x00, 0x00, 0x00, 0x00, 0x7a, 0x00, 0x00,  // address
  };
  CHECK(bytes == expected);
}

TEST_CASE("text fields are a u16 length followed by utf-8 bytes")
{
  Writer w;
  w.text("lidar");
  const std::vector<uint8_t> expected = {0x05, 0x00, 'l', 'i', 'd', 'a', 'r'};
  CHECK(w.take() == expected);
}

TEST_CASE("register request round trips")
{
  RegisterRequest req;
  req.pid = 4242;
  req.transport = kTransportBaseline;
  req.topic = "points/front";

  const auto frame = reparse(encode_frame(kRegisterPublisher, encode(req)));
  CHECK(frame.opcode == kRegisterPublisher);
  auto back = decode_register_request(frame.payload);
  REQUIRE(back.has_value());
  CHECK(back->pid == 4242);
  CHECK(back->transport == kTransportBaseline);
  CHECK(back->topic == "points/front");
}

TEST_CASE("publisher reply round trips with arena geometry")
{
  RegisterPublisherReply reply;
  reply.publisher_id = 7;
  reply.subscriber_count = 3;
  reply.arena.name = "zerocast.1234";
  reply.arena.base = 0x7a0000000000ULL;
  reply.arena.capacity = 64ULL << 20;

  const auto frame = reparse(encode_frame(kRegisterPublisher, encode(reply)));
  auto back = decode_register_publisher_reply(frame.payload);
  REQUIRE(back.has_value());
  CHECK(back->publisher_id == 7);
  CHECK(back->subscriber_count == 3);
  CHECK(back->arena.name == "zerocast.1234");
  CHECK(back->arena.base == 0x7a0000000000ULL);
  CHECK(back->arena.capacity == 64ULL << 20);
}

TEST_CASE("subscriber reply carries every active arena")
{
  RegisterSubscriberReply reply;
  reply.subscriber_id = 9;
  for (int i = 0; i < 3; ++i) {
    ArenaInfo info;
    info.name = "zerocast." + std::to_string(100 + i);
    info.base = 0x7a0000000000ULL + static_cast<uint64_t>(i) * (128ULL << 20);
    info.capacity = 64ULL << 20;
    reply.arenas.push_back(info);
  }

  const auto frame = reparse(encode_frame(kRegisterSubscriber, encode(reply)));
  auto back = decode_register_subscriber_reply(frame.payload);
  REQUIRE(back.has_value());
  CHECK(back->subscriber_id == 9);
  REQUIRE(back->arenas.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back->arenas[i].name == reply.arenas[i].name);
    CHECK(back->arenas[i].base == reply.arenas[i].base);
    CHECK(back->arenas[i].capacity == reply.arenas[i].capacity);
  }
}

TEST_CASE("remaining message types round trip")
{
  SUBCASE("publish reply") {
    PublishReply m;
    m.entry_id = 555;
    auto back = decode_publish_reply(reparse(encode_frame(kPublishEntry, encode(m))).payload);
    REQUIRE(back.has_value());
    CHECK(back->entry_id == 555);
  }
  SUBCASE("ref request") {
    RefRequest m;
    m.holder_id = 3;
    m.publisher_id = 1;
    m.entry_id = 42;
    auto back = decode_ref_request(reparse(encode_frame(kIncrRef, encode(m))).payload);
    REQUIRE(back.has_value());
    CHECK(back->holder_id == 3);
    CHECK(back->publisher_id == 1);
    CHECK(back->entry_id == 42);
  }
  SUBCASE("reclaim notice") {
    ReclaimNotice m;
    m.publisher_id = 2;
    m.entry_id = 13;
    auto back = decode_reclaim_notice(reparse(encode_frame(kReclaimNotice, encode(m))).payload);
    REQUIRE(back.has_value());
    CHECK(back->publisher_id == 2);
    CHECK(back->entry_id == 13);
  }
  SUBCASE("delivery") {
    Delivery m;
    m.subscriber_id = 4;
    m.publisher_id = 2;
    m.entry_id = 99;
    m.address = 0x7a0000001000ULL;
    m.arena_name = "zerocast.777";
    auto back = decode_delivery(reparse(encode_frame(kDelivery, encode(m))).payload);
    REQUIRE(back.has_value());
    CHECK(back->subscriber_id == 4);
    CHECK(back->publisher_id == 2);
    CHECK(back->entry_id == 99);
    CHECK(back->address == 0x7a0000001000ULL);
    CHECK(back->arena_name == "zerocast.777");
  }
  SUBCASE("arena announce") {
    ArenaAnnounce m;
    m.subscriber_id = 6;
    m.arena.name = "zerocast.31337";
    m.arena.base = 0x7a0000000000ULL;
    m.arena.capacity = 1ULL << 20;
    auto back = decode_arena_announce(reparse(encode_frame(kArenaAnnounce, encode(m))).payload);
    REQUIRE(back.has_value());
    CHECK(back->subscriber_id == 6);
    CHECK(back->arena.name == "zerocast.31337");
  }
  SUBCASE("baseline publish and delivery") {
    BaselinePublish p;
    p.publisher_id = 11;
    p.payload = {1, 2, 3, 4, 5};
    auto pb = decode_baseline_publish(reparse(encode_frame(kBaselinePublish, encode(p))).payload);
    REQUIRE(pb.has_value());
    CHECK(pb->publisher_id == 11);
    CHECK(pb->payload == std::vector<uint8_t>{1, 2, 3, 4, 5});

    BaselineDelivery d;
    d.subscriber_id = 12;
    d.origin_id = 11;
    d.payload = {9, 8, 7};
    auto db = decode_baseline_delivery(reparse(encode_frame(kBaselineDelivery, encode(d))).payload);
    REQUIRE(db.has_value());
    CHECK(db->subscriber_id == 12);
    CHECK(db->origin_id == 11);
    CHECK(db->payload == std::vector<uint8_t>{9, 8, 7});
  }
  SUBCASE("error") {
    const auto payload = encode_error(Errc::queue_full, "subscriber 4 is full");
    auto back = decode_error(reparse(encode_frame(kError, payload)).payload);
    REQUIRE(back.has_value());
    CHECK(back->code == static_cast<uint16_t>(Errc::queue_full));
    CHECK(back->message == "subscriber 4 is full");
  }
}

TEST_CASE("the parser reassembles frames from arbitrary splits")
{
  PublishRequest req;
  req.publisher_id = 77;
  req.address = 0x7a00deadbeefULL;
  auto one = encode_frame(kPublishEntry, encode(req));

  Delivery del;
  del.subscriber_id = 1;
  del.publisher_id = 77;
  del.entry_id = 5;
  del.address = req.address;
  del.arena_name = "zerocast.77";
  auto two = encode_frame(kDelivery, encode(del));

  std::vector<uint8_t> stream = one;
  stream.insert(stream.end(), two.begin(), two.end());

  std::mt19937 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    FrameParser parser;
    size_t offset = 0;
    std::vector<Frame> frames;
    while (offset < stream.size()) {
      std::uniform_int_distribution<size_t> chunk_dist(1, stream.size() - offset);
      const size_t chunk = trial == 0 ? 1 : chunk_dist(rng);
      parser.feed(stream.data() + offset, chunk);
      offset += chunk;
      while (auto frame = parser.next()) {
        frames.push_back(std::move(*frame));
      }
    }
    REQUIRE(!parser.violated());
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].opcode == kPublishEntry);
    CHECK(frames[1].opcode == kDelivery);
    auto back = decode_delivery(frames[1].payload);
    REQUIRE(back.has_value());
    CHECK(back->entry_id == 5);
  }
}

TEST_CASE("mid_frame reports buffered partial input")
{
  PublishRequest req;
  req.publisher_id = 1;
  req.address = 2;
  const auto bytes = encode_frame(kPublishEntry, encode(req));

  FrameParser parser;
  CHECK(!parser.mid_frame());
  parser.feed(bytes.data(), bytes.size() - 3);
  CHECK(!parser.next().has_value());
  CHECK(parser.mid_frame());
  parser.feed(bytes.data() + bytes.size() - 3, 3);
  CHECK(parser.next().has_value());
  CHECK(!parser.mid_frame());
}

TEST_CASE("zero and oversize lengths poison the stream")
{
  SUBCASE("zero") {
    const uint8_t zero[4] = {0, 0, 0, 0};
    FrameParser parser;
    parser.feed(zero, 4);
    CHECK(!parser.next().has_value());
    CHECK(parser.violated());
  }
  SUBCASE("oversize") {
    Writer w;
    w.u32(64 * 1024 * 1024 + 1);
    const auto bytes = w.take();
    FrameParser parser;
    parser.feed(bytes.data(), bytes.size());
    CHECK(!parser.next().has_value());
    CHECK(parser.violated());
  }
}

TEST_CASE("decoders reject truncated and oversized payloads")
{
  RegisterRequest req;
  req.pid = 1;
  req.transport = kTransportZeroCopy;
  req.topic = "t";
  auto payload = encode(req);

  SUBCASE("truncated") {
    payload.pop_back();
    CHECK(!decode_register_request(payload).has_value());
  }
  SUBCASE("trailing garbage") {
    payload.push_back(0x00);
    CHECK(!decode_register_request(payload).has_value());
  }
  SUBCASE("bad transport byte") {
    payload[8] = 2;
    CHECK(!decode_register_request(payload).has_value());
  }
  SUBCASE("empty") {
    CHECK(!decode_publish_request(std::vector<uint8_t>{}).has_value());
  }
}

TEST_CASE("socket path resolution prefers explicit then environment")
{
  ::unsetenv(kBrokerEnvVar);
  CHECK(resolve_socket_path("") == kDefaultSocketPath);
  ::setenv(kBrokerEnvVar, "/tmp/zc_env.sock", 1);
  CHECK(resolve_socket_path("") == "/tmp/zc_env.sock");
  CHECK(resolve_socket_path("/tmp/zc_explicit.sock") == "/tmp/zc_explicit.sock");
  ::unsetenv(kBrokerEnvVar);
}

}  // TEST_SUITE("wire")
