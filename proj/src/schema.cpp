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

#include "zerocast/schema.hpp"

#include <cstring>
#include <limits>
#include <utility>

namespace zerocast
{

namespace
{

constexpr uint64_t kSeqBlockSize = sizeof(DynSeq);

const uint8_t * seq_data(const DynSeq & seq)
{
  return reinterpret_cast<const uint8_t *>(static_cast<uintptr_t>(seq.data));
}

}  // namespace

Status validate(const MessageSchema & schema)
{
  if (schema.fixed_size == 0) {
    return Status(Errc::invalid_argument, "schema '" + schema.name + "' has no fixed region");
  }
  uint64_t cursor = 0;
  for (size_t i = 0; i < schema.seqs.size(); ++i) {
    const SeqField & field = schema.seqs[i];
    if (field.element_size == 0) {
      return Status(Errc::invalid_argument, "sequence element size must be nonzero");
    }
    if (field.offset < cursor || field.offset + kSeqBlockSize > schema.fixed_size) {
      return Status(
        Errc::invalid_argument,
        "sequence control block " + std::to_string(i) + " overlaps or overflows");
    }
    cursor = field.offset + kSeqBlockSize;
  }
  return Status{};
}

const MessageSchema & fixed_record_128()
{
  static const MessageSchema schema{"fixed_record_128", 128, {}};
  return schema;
}

const MessageSchema & pointcloud_like()
{
  static const MessageSchema schema{"pointcloud_like", 56, {SeqField{24, 1}}};
  return schema;
}

DynSeq * seq_at(const MessageSchema & schema, void * root, size_t index)
{
  return reinterpret_cast<DynSeq *>(
    static_cast<uint8_t *>(root) + schema.seqs.at(index).offset);
}

const DynSeq * seq_at(const MessageSchema & schema, const void * root, size_t index)
{
  return reinterpret_cast<const DynSeq *>(
    static_cast<const uint8_t *>(root) + schema.seqs.at(index).offset);
}

uint64_t serialized_size(const MessageSchema & schema, const void * root)
{
  uint64_t size = schema.fixed_size;
  for (size_t i = 0; i < schema.seqs.size(); ++i) {
    const DynSeq * seq = seq_at(schema, root, i);
    size += sizeof(uint32_t) + seq->byte_length() - kSeqBlockSize;
  }
  return size;
}

Result<std::vector<uint8_t>> serialize(const MessageSchema & schema, const void * root)
{
  const auto * bytes = static_cast<const uint8_t *>(root);
  std::vector<uint8_t> out;
  out.reserve(serialized_size(schema, root));

  uint64_t cursor = 0;
  for (size_t i = 0; i < schema.seqs.size(); ++i) {
    const SeqField & field = schema.seqs[i];
    out.insert(out.end(), bytes + cursor, bytes + field.offset);
    cursor = field.offset + kSeqBlockSize;

    const DynSeq * seq = seq_at(schema, root, i);
    if (seq->length > seq->capacity || (seq->data == 0 && seq->length != 0)) {
      return Status(Errc::invalid_argument, "corrupt sequence control block");
    }
    if (seq->byte_length() > std::numeric_limits<uint32_t>::max()) {
      return Status(Errc::payload_too_large, "sequence too long to serialize");
    }
    const auto length = static_cast<uint32_t>(seq->length);
    const auto * length_bytes = reinterpret_cast<const uint8_t *>(&length);
    out.insert(out.end(), length_bytes, length_bytes + sizeof(length));
    if (seq->length != 0) {
      const uint8_t * data = seq_data(*seq);
      out.insert(out.end(), data, data + seq->byte_length());
    }
  }
  out.insert(out.end(), bytes + cursor, bytes + schema.fixed_size);
  return out;
}

HeapMessage::HeapMessage(const MessageSchema & schema)
: schema_(&schema), fixed_(schema.fixed_size, 0), buffers_(schema.seqs.size())
{
  for (size_t i = 0; i < schema.seqs.size(); ++i) {
    *seq_at(schema, fixed_.data(), i) = DynSeq{0, 0, 0, schema.seqs[i].element_size};
  }
}

HeapMessage::HeapMessage(HeapMessage && other) noexcept
: schema_(other.schema_), fixed_(std::move(other.fixed_)),
  buffers_(std::move(other.buffers_))
{
  rebind();
}

HeapMessage & HeapMessage::operator=(HeapMessage && other) noexcept
{
  if (this != &other) {
    schema_ = other.schema_;
    fixed_ = std::move(other.fixed_);
    buffers_ = std::move(other.buffers_);
    rebind();
  }
  return *this;
}

void HeapMessage::seq_assign(size_t index, const void * elements, uint64_t count)
{
  const uint64_t element_size = schema_->seqs.at(index).element_size;
  std::vector<uint8_t> & buffer = buffers_.at(index);
  buffer.assign(
    static_cast<const uint8_t *>(elements),
    static_cast<const uint8_t *>(elements) + count * element_size);

  DynSeq * seq = seq_at(*schema_, fixed_.data(), index);
  seq->data = count == 0 ? 0 : reinterpret_cast<uintptr_t>(buffer.data());
  seq->length = count;
  seq->capacity = count;
  seq->element_size = element_size;
}

void HeapMessage::rebind()
{
  // Vector moves keep buffer storage in place, but re-point the control
  // blocks anyway so a future small-buffer tweak cannot silently dangle.
  for (size_t i = 0; i < buffers_.size(); ++i) {
    DynSeq * seq = seq_at(*schema_, fixed_.data(), i);
    if (seq->length != 0) {
      seq->data = reinterpret_cast<uintptr_t>(buffers_[i].data());
    }
  }
}

Result<HeapMessage> deserialize(
  const MessageSchema & schema, const uint8_t * bytes, size_t size)
{
  HeapMessage message(schema);
  uint8_t * root = message.root();

  size_t in = 0;
  uint64_t out = 0;
  auto take = [&](uint64_t n, uint8_t * dst) -> bool {
      if (size - in < n) {
        return false;
      }
      if (dst != nullptr) {
        std::memcpy(dst, bytes + in, n);
      }
      in += n;
      return true;
    };

  for (size_t i = 0; i < schema.seqs.size(); ++i) {
    const SeqField & field = schema.seqs[i];
    if (!take(field.offset - out, root + out)) {
      return Status(Errc::invalid_argument, "truncated message: fixed region");
    }
    out = field.offset + sizeof(DynSeq);

    uint32_t length = 0;
    if (!take(sizeof(length), reinterpret_cast<uint8_t *>(&length))) {
      return Status(Errc::invalid_argument, "truncated message: sequence length");
    }
    const uint64_t byte_length = uint64_t{length} * field.element_size;
    if (size - in < byte_length) {
      return Status(Errc::invalid_argument, "truncated message: sequence elements");
    }
    message.seq_assign(i, bytes + in, length);
    in += byte_length;
  }
  if (!take(schema.fixed_size - out, root + out)) {
    return Status(Errc::invalid_argument, "truncated message: trailing fixed region");
  }
  if (in != size) {
    return Status(Errc::invalid_argument, "overlong message: trailing bytes");
  }
  return message;
}

bool message_equal(const MessageSchema & schema, const void * a, const void * b)
{
  const auto * pa = static_cast<const uint8_t *>(a);
  const auto * pb = static_cast<const uint8_t *>(b);
  uint64_t cursor = 0;
  for (size_t i = 0; i < schema.seqs.size(); ++i) {
    const SeqField & field = schema.seqs[i];
    if (std::memcmp(pa + cursor, pb + cursor, field.offset - cursor) != 0) {
      return false;
    }
    cursor = field.offset + sizeof(DynSeq);

    const DynSeq * sa = seq_at(schema, a, i);
    const DynSeq * sb = seq_at(schema, b, i);
    if (sa->length != sb->length || sa->element_size != sb->element_size) {
      return false;
    }
    if (sa->length != 0 &&
      std::memcmp(seq_data(*sa), seq_data(*sb), sa->byte_length()) != 0)
    {
      return false;
    }
  }
  return std::memcmp(pa + cursor, pb + cursor, schema.fixed_size - cursor) == 0;
}

}  // namespace zerocast
