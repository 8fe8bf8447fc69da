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

#ifndef ZEROCAST__WIRE_HPP_
#define ZEROCAST__WIRE_HPP_

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "zerocast/status.hpp"

namespace zerocast::wire
{

// Every frame on the broker socket is [u32 LE length][u8 opcode][payload],
// where length counts the opcode byte plus the payload. Integers are
// little-endian fixed width, text fields are [u16 LE length][UTF-8 bytes],
// addresses are u64.

enum Opcode : uint8_t
{
  kRegisterPublisher = 0x01,
  kRegisterSubscriber = 0x02,
  kPublishEntry = 0x03,
  kIncrRef = 0x04,
  kDecrRef = 0x05,
  kReclaimNotice = 0x06,
  kDelivery = 0x07,
  kArenaAnnounce = 0x08,
  kBaselinePublish = 0x09,
  kBaselineDelivery = 0x0A,
  kError = 0x7F,
};

enum Transport : uint8_t
{
  kTransportZeroCopy = 0,
  kTransportBaseline = 1,
};

// Frames above this are treated as a protocol violation (the baseline payload
// cap is 16 MiB; everything else is far smaller).
constexpr uint32_t kMaxFrameBytes = 64u << 20;

constexpr const char * kDefaultSocketPath = "/tmp/zerocast.sock";
constexpr const char * kBrokerEnvVar = "ZEROCAST_BROKER";

/// Broker endpoint path: explicit arg if nonempty, else $ZEROCAST_BROKER, else default.
std::string resolve_socket_path(const std::string & explicit_path = "");

/// Little-endian appender used for every frame payload.
class Writer
{
public:
  void u8(uint8_t v) {buf_.push_back(v);}
  void u16(uint16_t v)
  {
    buf_.push_back(static_cast<uint8_t>(v));
    buf_.push_back(static_cast<uint8_t>(v >> 8));
  }
  void u32(uint32_t v)
  {
    for (int i = 0; i < 4; ++i) {
      buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
  }
  void u64(uint64_t v)
  {
    for (int i = 0; i < 8; ++i) {
      buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
  }
  void text(const std::string & s)
  {
    u16(static_cast<uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void bytes(const void * p, size_t n)
  {
    const auto * b = static_cast<const uint8_t *>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

  const std::vector<uint8_t> & data() const {return buf_;}
  std::vector<uint8_t> take() {return std::move(buf_);}

private:
  std::vector<uint8_t> buf_;
};

/// Bounds-checked little-endian reader; any overrun poisons the reader.
class Reader
{
public:
  Reader(const uint8_t * data, size_t size)
  : data_(data), size_(size) {}

  uint8_t u8() {return take(1) ? data_[pos_ - 1] : 0;}
  uint16_t u16()
  {
    if (!take(2)) {return 0;}
    return static_cast<uint16_t>(data_[pos_ - 2] | (data_[pos_ - 1] << 8));
  }
  uint32_t u32()
  {
    if (!take(4)) {return 0;}
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(data_[pos_ - 4 + i]) << (8 * i);
    }
    return v;
  }
  uint64_t u64()
  {
    if (!take(8)) {return 0;}
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(data_[pos_ - 8 + i]) << (8 * i);
    }
    return v;
  }
  std::string text()
  {
    uint16_t n = u16();
    if (!take(n)) {return {};}
    return std::string(reinterpret_cast<const char *>(data_ + pos_ - n), n);
  }
  std::vector<uint8_t> blob32()
  {
    uint32_t n = u32();
    if (!take(n)) {return {};}
    return std::vector<uint8_t>(data_ + pos_ - n, data_ + pos_);
  }

  size_t remaining() const {return ok_ ? size_ - pos_ : 0;}
  /// True iff no read ever ran past the end.
  bool ok() const {return ok_;}
  /// True iff fully consumed without overrun; trailing garbage is a violation.
  bool done() const {return ok_ && pos_ == size_;}

private:
  bool take(size_t n)
  {
    if (!ok_ || size_ - pos_ < n) {
      ok_ = false;
      return false;
    }
    pos_ += n;
    return true;
  }

  const uint8_t * data_;
  size_t size_;
  size_t pos_{0};
  bool ok_{true};
};

struct Frame
{
  uint8_t opcode{0};
  std::vector<uint8_t> payload;
};

/// Serialize a frame, including the length prefix.
std::vector<uint8_t> encode_frame(uint8_t opcode, const std::vector<uint8_t> & payload);

/// Incremental stream decoder. feed() appends raw socket bytes; next() pops
/// complete frames. A malformed length poisons the parser (session must die).
class FrameParser
{
public:
  void feed(const void * data, size_t n);
  std::optional<Frame> next();

  bool violated() const {return violated_;}
  /// True when a frame prefix sits half-read in the buffer.
  bool mid_frame() const {return !buf_.empty();}

private:
  std::vector<uint8_t> buf_;
  bool violated_{false};
};

// ---------------------------------------------------------------------------
// Typed payloads. decode_* returns nullopt on malformed input.

struct ArenaInfo
{
  std::string name;
  uint64_t base{0};
  uint64_t capacity{0};
};

struct RegisterRequest  // kRegisterPublisher / kRegisterSubscriber
{
  uint64_t pid{0};
  uint8_t transport{kTransportZeroCopy};
  std::string topic;
};

struct RegisterPublisherReply
{
  uint64_t publisher_id{0};
  uint32_t subscriber_count{0};
  ArenaInfo arena;
};

struct RegisterSubscriberReply
{
  uint64_t subscriber_id{0};
  std::vector<ArenaInfo> arenas;
};

struct PublishRequest
{
  uint64_t publisher_id{0};
  uint64_t address{0};
};

struct PublishReply
{
  uint64_t entry_id{0};
};

struct RefRequest  // kIncrRef / kDecrRef
{
  uint64_t holder_id{0};
  uint64_t publisher_id{0};
  uint64_t entry_id{0};
};

struct ReclaimNotice
{
  uint64_t publisher_id{0};
  uint64_t entry_id{0};
};

struct Delivery
{
  uint64_t subscriber_id{0};
  uint64_t publisher_id{0};
  uint64_t entry_id{0};
  uint64_t address{0};
  std::string arena_name;
};

struct ArenaAnnounce
{
  uint64_t subscriber_id{0};
  ArenaInfo arena;
};

struct BaselinePublish
{
  uint64_t publisher_id{0};
  std::vector<uint8_t> payload;
};

struct BaselineDelivery
{
  uint64_t subscriber_id{0};
  uint64_t origin_id{0};
  std::vector<uint8_t> payload;
};

struct WireError
{
  uint16_t code{0};
  std::string message;
};

std::vector<uint8_t> encode(const RegisterRequest & m);
std::vector<uint8_t> encode(const RegisterPublisherReply & m);
std::vector<uint8_t> encode(const RegisterSubscriberReply & m);
std::vector<uint8_t> encode(const PublishRequest & m);
std::vector<uint8_t> encode(const PublishReply & m);
std::vector<uint8_t> encode(const RefRequest & m);
std::vector<uint8_t> encode(const ReclaimNotice & m);
std::vector<uint8_t> encode(const Delivery & m);
std::vector<uint8_t> encode(const ArenaAnnounce & m);
std::vector<uint8_t> encode(const BaselinePublish & m);
std::vector<uint8_t> encode(const BaselineDelivery & m);
std::vector<uint8_t> encode_error(Errc code, const std::string & message);

std::optional<RegisterRequest> decode_register_request(const std::vector<uint8_t> & p);
std::optional<RegisterPublisherReply> decode_register_publisher_reply(
  const std::vector<uint8_t> & p);
std::optional<RegisterSubscriberReply> decode_register_subscriber_reply(
  const std::vector<uint8_t> & p);
std::optional<PublishRequest> decode_publish_request(const std::vector<uint8_t> & p);
std::optional<PublishReply> decode_publish_reply(const std::vector<uint8_t> & p);
std::optional<RefRequest> decode_ref_request(const std::vector<uint8_t> & p);
std::optional<ReclaimNotice> decode_reclaim_notice(const std::vector<uint8_t> & p);
std::optional<Delivery> decode_delivery(const std::vector<uint8_t> & p);
std::optional<ArenaAnnounce> decode_arena_announce(const std::vector<uint8_t> & p);
std::optional<BaselinePublish> decode_baseline_publish(const std::vector<uint8_t> & p);
std::optional<BaselineDelivery> decode_baseline_delivery(const std::vector<uint8_t> & p);
std::optional<WireError> decode_error(const std::vector<uint8_t> & p);

}  // namespace zerocast::wire

#endif  // ZEROCAST__WIRE_HPP_
