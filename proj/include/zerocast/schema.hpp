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

#ifndef ZEROCAST__SCHEMA_HPP_
#define ZEROCAST__SCHEMA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "zerocast/status.hpp"

namespace zerocast
{

/// Control block of a resizable in-message sequence.
///
/// The block itself lives inside the message's fixed region; the backing
/// buffer it points at is a separate allocation (in the publisher's arena for
/// zero-copy messages, on the heap for deserialized ones). `data` holds an
/// absolute address, which stays valid across processes because every arena
/// is mapped at the same base everywhere.
struct DynSeq
{
  static constexpr uint64_t kInitialCapacity = 4;  // first growth step; then x2

  uint64_t data{0};          // backing buffer address; 0 = empty sentinel
  uint64_t length{0};        // elements currently stored
  uint64_t capacity{0};      // elements the buffer can hold
  uint64_t element_size{0};  // bytes per element

  bool empty() const {return length == 0;}
  uint64_t byte_length() const {return length * element_size;}
};

static_assert(sizeof(DynSeq) == 32, "DynSeq control block layout is part of the ABI");

/// One resizable-sequence field inside a message layout.
struct SeqField
{
  uint64_t offset{0};        // byte offset of the DynSeq control block
  uint64_t element_size{1};  // bytes per element of the backing buffer
};

/// Describes a message layout: a fixed-size root region with zero or more
/// DynSeq control blocks embedded at known offsets. Messages are composed of
/// plain little-endian fields plus these sequences; there is no nesting.
struct MessageSchema
{
  std::string name;
  uint64_t fixed_size{0};
  std::vector<SeqField> seqs;  // ascending, non-overlapping offsets
};

/// Checks offsets are in bounds, ascending, and non-overlapping.
Status validate(const MessageSchema & schema);

/// A 128-byte record with no sequences; the smallest interesting payload.
const MessageSchema & fixed_record_128();

/// A sensor-style record: fixed header fields plus one byte sequence.
/// Layout: stamp_ns u64 @0, height u32 @8, width u32 @12, point_step u32 @16,
/// is_dense u32 @20, then the data sequence's control block @24.
const MessageSchema & pointcloud_like();

/// Returns the control block embedded at `schema.seqs[index]`.
DynSeq * seq_at(const MessageSchema & schema, void * root, size_t index);
const DynSeq * seq_at(const MessageSchema & schema, const void * root, size_t index);

/// Byte size of `serialize(schema, root)` without producing the bytes.
uint64_t serialized_size(const MessageSchema & schema, const void * root);

/// Flattens a message: fixed fields in declaration order (control blocks
/// elided), each sequence emitted as [u32 LE length][raw elements].
Result<std::vector<uint8_t>> serialize(const MessageSchema & schema, const void * root);

/// A heap-backed message, used where no arena is available (the copy-based
/// path). Owns its root region and one buffer per sequence; the embedded
/// control blocks point into those buffers, so readers use the exact same
/// accessors as for arena-resident messages.
class HeapMessage
{
public:
  explicit HeapMessage(const MessageSchema & schema);

  HeapMessage(const HeapMessage &) = delete;
  HeapMessage & operator=(const HeapMessage &) = delete;
  HeapMessage(HeapMessage && other) noexcept;
  HeapMessage & operator=(HeapMessage && other) noexcept;

  const MessageSchema & schema() const {return *schema_;}
  uint8_t * root() {return fixed_.data();}
  const uint8_t * root() const {return fixed_.data();}

  /// Replaces sequence `index` with `count` elements copied from `elements`.
  void seq_assign(size_t index, const void * elements, uint64_t count);

private:
  void rebind();

  const MessageSchema * schema_;
  std::vector<uint8_t> fixed_;
  std::vector<std::vector<uint8_t>> buffers_;
};

/// Exact inverse of serialize. Rejects truncated or overlong buffers.
Result<HeapMessage> deserialize(
  const MessageSchema & schema, const uint8_t * bytes, size_t size);

/// Content equality: fixed bytes outside control blocks, and per-sequence
/// length plus element bytes. Addresses and capacities are excluded — two
/// messages can be equal with differently placed backing buffers.
bool message_equal(const MessageSchema & schema, const void * a, const void * b);

}  // namespace zerocast

#endif  // ZEROCAST__SCHEMA_HPP_
