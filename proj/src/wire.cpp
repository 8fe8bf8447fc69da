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

#include "zerocast/wire.hpp"

#include <cstdlib>

namespace zerocast::wire
{

std::string resolve_socket_path(const std::string & explicit_path)
{
  if (!explicit_path.empty()) {
    return explicit_path;
  }
  if (const char * env = std::getenv(kBrokerEnvVar); env != nullptr && env[0] != '\0') {
    return env;
  }
  return kDefaultSocketPath;
}

std::vector<uint8_t> encode_frame(uint8_t opcode, const std::vector<uint8_t> & payload)
{
  Writer w;
  w.u32(static_cast<uint32_t>(payload.size() + 1));
  w.u8(opcode);
  w.bytes(payload.data(), payload.size());
  return w.take();
}

void FrameParser::feed(const void * data, size_t n)
{
  const auto * b = static_cast<const uint8_t *>(data);
  buf_.insert(buf_.end(), b, b + n);
}

std::optional<Frame> FrameParser::next()
{
  if (violated_ || buf_.size() < 4) {
    return std::nullopt;
  }
  uint32_t len = 0;
  for (int i = 0; i < 4; ++i) {
    len |= static_cast<uint32_t>(buf_[i]) << (8 * i);
  }
  if (len == 0 || len > kMaxFrameBytes) {
    violated_ = true;
    return std::nullopt;
  }
  if (buf_.size() < 4u + len) {
    return std::nullopt;
  }
  Frame f;
  f.opcode = buf_[4];
  f.payload.assign(buf_.begin() + 5, buf_.begin() + 4 + len);
  buf_.erase(buf_.begin(), buf_.begin() + 4 + len);
  return f;
}

namespace
{

std::vector<uint8_t> arena_bytes(Writer & w, const ArenaInfo & a)
{
  w.text(a.name);
  w.u64(a.base);
  w.u64(a.capacity);
  return w.take();
}

ArenaInfo read_arena(Reader & r)
{
  ArenaInfo a;
  a.name = r.text();
  a.base = r.u64();
  a.capacity = r.u64();
  return a;
}

}  // namespace

std::vector<uint8_t> encode(const RegisterRequest & m)
{
  Writer w;
  w.u64(m.pid);
  w.u8(m.transport);
  w.text(m.topic);
  return w.take();
}

std::vector<uint8_t> encode(const RegisterPublisherReply & m)
{
  Writer w;
  w.u64(m.publisher_id);
  w.u32(m.subscriber_count);
  return arena_bytes(w, m.arena);
}

std::vector<uint8_t> encode(const RegisterSubscriberReply & m)
{
  Writer w;
  w.u64(m.subscriber_id);
  w.u32(static_cast<uint32_t>(m.arenas.size()));
  for (const auto & a : m.arenas) {
    w.text(a.name);
    w.u64(a.base);
    w.u64(a.capacity);
  }
  return w.take();
}

std::vector<uint8_t> encode(const PublishRequest & m)
{
  Writer w;
  w.u64(m.publisher_id);
  w.u64(m.address);
  return w.take();
}

std::vector<uint8_t> encode(const PublishReply & m)
{
  Writer w;
  w.u64(m.entry_id);
  return w.take();
}

std::vector<uint8_t> encode(const RefRequest & m)
{
  Writer w;
  w.u64(m.holder_id);
  w.u64(m.publisher_id);
  w.u64(m.entry_id);
  return w.take();
}

std::vector<uint8_t> encode(const ReclaimNotice & m)
{
  Writer w;
  w.u64(m.publisher_id);
  w.u64(m.entry_id);
  return w.take();
}

std::vector<uint8_t> encode(const Delivery & m)
{
  Writer w;
  w.u64(m.subscriber_id);
  w.u64(m.publisher_id);
  w.u64(m.entry_id);
  w.u64(m.address);
  w.text(m.arena_name);
  return w.take();
}

std::vector<uint8_t> encode(const ArenaAnnounce & m)
{
  Writer w;
  w.u64(m.subscriber_id);
  return arena_bytes(w, m.arena);
}

std::vector<uint8_t> encode(const BaselinePublish & m)
{
  Writer w;
  w.u64(m.publisher_id);
  w.u32(static_cast<uint32_t>(m.payload.size()));
  w.bytes(m.payload.data(), m.payload.size());
  return w.take();
}

std::vector<uint8_t> encode(const BaselineDelivery & m)
{
  Writer w;
  w.u64(m.subscriber_id);
  w.u64(m.origin_id);
  w.u32(static_cast<uint32_t>(m.payload.size()));
  w.bytes(m.payload.data(), m.payload.size());
  return w.take();
}

std::vector<uint8_t> encode_error(Errc code, const std::string & message)
{
  Writer w;
  w.u16(static_cast<uint16_t>(code));
  w.text(message);
  return w.take();
}

std::optional<RegisterRequest> decode_register_request(const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  RegisterRequest m;
  m.pid = r.u64();
  m.transport = r.u8();
  m.topic = r.text();
  if (!r.done() || m.transport > kTransportBaseline) {
    return std::nullopt;
  }
  return m;
}

std::optional<RegisterPublisherReply> decode_register_publisher_reply(
  const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  RegisterPublisherReply m;
  m.publisher_id = r.u64();
  m.subscriber_count = r.u32();
  m.arena = read_arena(r);
  if (!r.done()) {return std::nullopt;}
  return m;
}

std::optional<RegisterSubscriberReply> decode_register_subscriber_reply(
  const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  RegisterSubscriberReply m;
  m.subscriber_id = r.u64();
  uint32_t n = r.u32();
  for (uint32_t i = 0; i < n && r.ok(); ++i) {
    m.arenas.push_back(read_arena(r));
  }
  if (!r.done()) {return std::nullopt;}
  return m;
}

std::optional<PublishRequest> decode_publish_request(const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  PublishRequest m;
  m.publisher_id = r.u64();
  m.address = r.u64();
  if (!r.done()) {return std::nullopt;}
  return m;
}

std::optional<PublishReply> decode_publish_reply(const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  PublishReply m;
  m.entry_id = r.u64();
  if (!r.done()) {return std::nullopt;}
  return m;
}

std::optional<RefRequest> decode_ref_request(const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  RefRequest m;
  m.holder_id = r.u64();
  m.publisher_id = r.u64();
  m.entry_id = r.u64();
  if (!r.done()) {return std::nullopt;}
  return m;
}

std::optional<ReclaimNotice> decode_reclaim_notice(const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  ReclaimNotice m;
  m.publisher_id = r.u64();
  m.entry_id = r.u64();
  if (!r.done()) {return std::nullopt;}
  return m;
}

std::optional<Delivery> decode_delivery(const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  Delivery m;
  m.subscriber_id = r.u64();
  m.publisher_id = r.u64();
  m.entry_id = r.u64();
  m.address = r.u64();
  m.arena_name = r.text();
  if (!r.done()) {return std::nullopt;}
  return m;
}

std::optional<ArenaAnnounce> decode_arena_announce(const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  ArenaAnnounce m;
  m.subscriber_id = r.u64();
  m.arena = read_arena(r);
  if (!r.done()) {return std::nullopt;}
  return m;
}

std::optional<BaselinePublish> decode_baseline_publish(const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  BaselinePublish m;
  m.publisher_id = r.u64();
  m.payload = r.blob32();
  if (!r.done()) {return std::nullopt;}
  return m;
}

std::optional<BaselineDelivery> decode_baseline_delivery(const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  BaselineDelivery m;
  m.subscriber_id = r.u64();
  m.origin_id = r.u64();
  m.payload = r.blob32();
  if (!r.done()) {return std::nullopt;}
  return m;
}

std::optional<WireError> decode_error(const std::vector<uint8_t> & p)
{
  Reader r{p.data(), p.size()};
  WireError m;
  m.code = r.u16();
  m.message = r.text();
  if (!r.done()) {return std::nullopt;}
  return m;
}

}  // namespace zerocast::wire
