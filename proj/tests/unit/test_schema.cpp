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

#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "zerocast/schema.hpp"

namespace
{

using zerocast::DynSeq;
using zerocast::Errc;
using zerocast::HeapMessage;
using zerocast::MessageSchema;
using zerocast::SeqField;

std::vector<uint8_t> random_bytes(std::mt19937_64 & rng, size_t n)
{
  std::vector<uint8_t> out(n);
  for (auto & b : out) {
    b = static_cast<uint8_t>(rng());
  }
  return out;
}

/// Builds a heap message with every byte (fixed and sequence) randomized.
HeapMessage random_message(std::mt19937_64 & rng, const MessageSchema & schema, size_t max_len)
{
  HeapMessage msg(schema);
  auto fixed = random_bytes(rng, schema.fixed_size);
  std::memcpy(msg.root(), fixed.data(), fixed.size());
  for (size_t i = 0; i < schema.seqs.size(); ++i) {
    const uint64_t len = rng() % (max_len + 1);
    auto elements = random_bytes(rng, len * schema.seqs[i].element_size);
    msg.seq_assign(i, elements.data(), len);
  }
  return msg;
}

TEST_SUITE("schema")
{
  TEST_CASE("builtin layouts")
  {
    const auto & fixed = zerocast::fixed_record_128();
    CHECK(fixed.fixed_size == 128);
    CHECK(fixed.seqs.empty());
    CHECK(zerocast::validate(fixed).ok());

    const auto & cloud = zerocast::pointcloud_like();
    CHECK(cloud.fixed_size == 56);
    REQUIRE(cloud.seqs.size() == 1);
    CHECK(cloud.seqs[0].offset == 24);
    CHECK(cloud.seqs[0].element_size == 1);
    CHECK(zerocast::validate(cloud).ok());
  }

  TEST_CASE("validate rejects bad layouts")
  {
    CHECK(zerocast::validate({"empty", 0, {}}).code() == Errc::invalid_argument);
    // Control block spilling past the fixed region.
    CHECK(zerocast::validate({"spill", 40, {SeqField{16, 1}}}).code() == Errc::invalid_argument);
    // Overlapping control blocks.
    CHECK(
      zerocast::validate({"overlap", 96, {SeqField{8, 1}, SeqField{24, 1}}}).code() ==
      Errc::invalid_argument);
    // Zero-size elements.
    CHECK(zerocast::validate({"zero", 64, {SeqField{8, 0}}}).code() == Errc::invalid_argument);
    CHECK(zerocast::validate({"fine", 80, {SeqField{8, 4}, SeqField{40, 2}}}).ok());
  }

  TEST_CASE("fixed 128-byte record serializes to exactly its own bytes")
  {
    std::mt19937_64 rng(1);
    HeapMessage msg = random_message(rng, zerocast::fixed_record_128(), 0);
    auto bytes = zerocast::serialize(msg.schema(), msg.root());
    REQUIRE(bytes.has_value());
    REQUIRE(bytes->size() == 128);
    CHECK(std::memcmp(bytes->data(), msg.root(), 128) == 0);
  }

  TEST_CASE("sequence of three u32 costs a length word plus twelve bytes")
  {
    const MessageSchema schema{"rec", 40, {SeqField{8, 4}}};
    REQUIRE(zerocast::validate(schema).ok());
    HeapMessage msg(schema);
    const uint32_t elements[3] = {7, 11, 13};
    msg.seq_assign(0, elements, 3);

    // 8 bytes of header + (4 + 12) for the sequence + 0 trailing.
    CHECK(zerocast::serialized_size(schema, msg.root()) == 8 + 4 + 12);
    auto bytes = zerocast::serialize(schema, msg.root());
    REQUIRE(bytes.has_value());
    REQUIRE(bytes->size() == 24);
    // Length word is little-endian at offset 8.
    CHECK((*bytes)[8] == 3);
    CHECK((*bytes)[9] == 0);
    uint32_t first = 0;
    std::memcpy(&first, bytes->data() + 12, 4);
    CHECK(first == 7);
  }

  TEST_CASE("empty sequence keeps the null sentinel through a round trip")
  {
    const auto & schema = zerocast::pointcloud_like();
    HeapMessage msg(schema);
    auto bytes = zerocast::serialize(schema, msg.root());
    REQUIRE(bytes.has_value());
    CHECK(bytes->size() == schema.fixed_size - sizeof(DynSeq) + 4);

    auto back = zerocast::deserialize(schema, bytes->data(), bytes->size());
    REQUIRE(back.has_value());
    const DynSeq * seq = zerocast::seq_at(schema, back->root(), 0);
    CHECK(seq->data == 0);
    CHECK(seq->length == 0);
    CHECK(seq->capacity == 0);
  }

  TEST_CASE("deserialize(serialize(m)) = m for randomized schemas and payloads")
  {
    std::mt19937_64 rng(0x5eed);
    for (int trial = 0; trial < 200; ++trial) {
      // Invent a schema: up to three sequences at spaced offsets.
      MessageSchema schema{"random", 0, {}};
      const size_t n_seqs = rng() % 4;
      uint64_t offset = 0;
      for (size_t i = 0; i < n_seqs; ++i) {
        offset += 8 * (1 + rng() % 3);
        const uint64_t element_size = uint64_t{1} << (rng() % 4);
        schema.seqs.push_back(SeqField{offset, element_size});
        offset += sizeof(DynSeq);
      }
      schema.fixed_size = offset + 8 * (1 + rng() % 3);
      REQUIRE(zerocast::validate(schema).ok());

      HeapMessage msg = random_message(rng, schema, 300);
      auto bytes = zerocast::serialize(schema, msg.root());
      REQUIRE(bytes.has_value());
      CHECK(bytes->size() == zerocast::serialized_size(schema, msg.root()));

      auto back = zerocast::deserialize(schema, bytes->data(), bytes->size());
      REQUIRE(back.has_value());
      CHECK(zerocast::message_equal(schema, msg.root(), back->root()));

      // Serializing the reconstruction reproduces the bytes exactly.
      auto again = zerocast::serialize(schema, back->root());
      REQUIRE(again.has_value());
      CHECK(*again == *bytes);
    }
  }

  TEST_CASE("round trip at multi-megabyte sizes")
  {
    std::mt19937_64 rng(42);
    const auto & schema = zerocast::pointcloud_like();
    for (size_t len : {size_t{1}, size_t{4096}, size_t{4} << 20}) {
      HeapMessage msg = random_message(rng, schema, 0);
      auto payload = random_bytes(rng, len);
      msg.seq_assign(0, payload.data(), payload.size());

      auto bytes = zerocast::serialize(schema, msg.root());
      REQUIRE(bytes.has_value());
      auto back = zerocast::deserialize(schema, bytes->data(), bytes->size());
      REQUIRE(back.has_value());
      CHECK(zerocast::message_equal(schema, msg.root(), back->root()));
    }
  }

  TEST_CASE("truncated and overlong buffers are rejected")
  {
    const auto & schema = zerocast::pointcloud_like();
    std::mt19937_64 rng(7);
    HeapMessage msg = random_message(rng, schema, 64);
    auto bytes = zerocast::serialize(schema, msg.root());
    REQUIRE(bytes.has_value());

    for (size_t cut : {size_t{0}, size_t{3}, size_t{bytes->size() - 1}}) {
      auto r = zerocast::deserialize(schema, bytes->data(), cut);
      CHECK_FALSE(r.has_value());
      CHECK(r.status().code() == Errc::invalid_argument);
    }

    auto longer = *bytes;
    longer.push_back(0);
    auto r = zerocast::deserialize(schema, longer.data(), longer.size());
    CHECK_FALSE(r.has_value());

    // A length word claiming more elements than the buffer holds.
    auto lying = *bytes;
    lying[24] = 0xFF;
    lying[25] = 0xFF;
    lying[26] = 0xFF;
    lying[27] = 0x7F;
    auto r2 = zerocast::deserialize(schema, lying.data(), lying.size());
    CHECK_FALSE(r2.has_value());
  }

  TEST_CASE("heap message move keeps control blocks valid")
  {
    const auto & schema = zerocast::pointcloud_like();
    HeapMessage msg(schema);
    const uint8_t payload[5] = {1, 2, 3, 4, 5};
    msg.seq_assign(0, payload, 5);

    HeapMessage moved = std::move(msg);
    const DynSeq * seq = zerocast::seq_at(schema, moved.root(), 0);
    REQUIRE(seq->length == 5);
    const auto * data = reinterpret_cast<const uint8_t *>(seq->data);
    CHECK(std::memcmp(data, payload, 5) == 0);
  }
}

}  // namespace
