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

#include "zerocast/broker_core.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "zerocast/arena.hpp"

namespace zerocast::broker
{

namespace
{

constexpr size_t kMaxTopicLength = 255;

uint64_t now_ns()
{
  return static_cast<uint64_t>(
    std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::steady_clock::now().time_since_epoch())
    .count());
}

bool valid_transport(uint8_t t)
{
  return t == wire::kTransportZeroCopy || t == wire::kTransportBaseline;
}

}  // namespace

BrokerCore::BrokerCore(Options options)
: options_(options) {}

BrokerCore::Endpoint * BrokerCore::find_endpoint(uint64_t id)
{
  auto it = endpoints_.find(id);
  return it == endpoints_.end() ? nullptr : &it->second;
}

BrokerCore::Endpoint * BrokerCore::find_publisher(uint64_t id)
{
  Endpoint * ep = find_endpoint(id);
  return (ep != nullptr && ep->is_publisher) ? ep : nullptr;
}

BrokerCore::QueueEntry * BrokerCore::find_entry(Endpoint & pub, uint64_t entry_id)
{
  for (auto & entry : pub.queue) {
    if (entry.entry_id == entry_id) {
      return &entry;
    }
  }
  return nullptr;
}

Result<BrokerCore::RegisterPublisherResult> BrokerCore::register_publisher(
  uint64_t client, uint64_t pid, uint8_t transport, const std::string & topic)
{
  if (topic.empty() || topic.size() > kMaxTopicLength) {
    return make_error(Errc::invalid_argument, "topic name empty or too long");
  }
  if (!valid_transport(transport)) {
    return make_error(Errc::invalid_argument, "unknown transport");
  }

  RegisterPublisherResult result;
  if (transport == wire::kTransportZeroCopy) {
    auto slot = arenas_.find(pid);
    if (slot != arenas_.end()) {
      if (slot->second.owner_client != client) {
        return make_error(
          Errc::arena_conflict, "pid " + std::to_string(pid) +
          " already holds an arena through another connection");
      }
      result.arena = slot->second.info;
    } else {
      wire::ArenaInfo info;
      info.name = default_arena_name(pid);
      info.base = options_.pool_start + next_slot_ * 2 * options_.arena_capacity;
      info.capacity = options_.arena_capacity;
      ++next_slot_;
      arenas_[pid] = ArenaSlot{info, client};
      result.arena = info;
    }
  }

  Endpoint ep;
  ep.id = next_id_++;
  ep.client = client;
  ep.pid = pid;
  ep.transport = transport;
  ep.is_publisher = true;
  ep.topic = topic;
  ep.arena = result.arena;
  result.publisher_id = ep.id;

  Topic & t = topics_[topic];
  t.publishers.push_back(ep.id);
  for (uint64_t sub_id : t.subscribers) {
    const Endpoint * sub = find_endpoint(sub_id);
    if (sub == nullptr || !sub->alive || sub->transport != transport) {
      continue;
    }
    ++result.subscriber_count;
    if (transport == wire::kTransportZeroCopy) {
      wire::ArenaAnnounce announce;
      announce.subscriber_id = sub_id;
      announce.arena = result.arena;
      result.emissions.push_back(AnnounceEmission{std::move(announce)});
    }
  }

  endpoints_.emplace(ep.id, std::move(ep));
  return result;
}

Result<BrokerCore::RegisterSubscriberResult> BrokerCore::register_subscriber(
  uint64_t client, uint64_t pid, uint8_t transport, const std::string & topic)
{
  if (topic.empty() || topic.size() > kMaxTopicLength) {
    return make_error(Errc::invalid_argument, "topic name empty or too long");
  }
  if (!valid_transport(transport)) {
    return make_error(Errc::invalid_argument, "unknown transport");
  }

  Endpoint ep;
  ep.id = next_id_++;
  ep.client = client;
  ep.pid = pid;
  ep.transport = transport;
  ep.is_publisher = false;
  ep.topic = topic;

  RegisterSubscriberResult result;
  result.subscriber_id = ep.id;

  Topic & t = topics_[topic];
  t.subscribers.push_back(ep.id);
  if (transport == wire::kTransportZeroCopy) {
    std::set<std::string> seen;
    for (uint64_t pub_id : t.publishers) {
      const Endpoint * pub = find_endpoint(pub_id);
      if (pub == nullptr || !pub->alive || pub->transport != wire::kTransportZeroCopy) {
        continue;
      }
      if (seen.insert(pub->arena.name).second) {
        result.arenas.push_back(pub->arena);
      }
    }
  }

  endpoints_.emplace(ep.id, std::move(ep));
  return result;
}

Result<BrokerCore::PublishResult> BrokerCore::publish_entry(
  uint64_t client, uint64_t publisher_id, uint64_t address)
{
  Endpoint * pub = find_publisher(publisher_id);
  if (pub == nullptr || !pub->alive) {
    return make_error(Errc::protocol_error, "unknown publisher");
  }
  if (pub->client != client) {
    return make_error(Errc::protocol_error, "publisher owned by another connection");
  }
  if (pub->transport != wire::kTransportZeroCopy) {
    return make_error(Errc::protocol_error, "publish_entry on a baseline publisher");
  }
  if (address < pub->arena.base || address >= pub->arena.base + pub->arena.capacity) {
    return make_error(
      Errc::address_out_of_arena,
      "address is outside the publisher's arena");
  }
  if (pub->queue.size() >= options_.queue_capacity) {
    return make_error(Errc::queue_full, "publisher queue is at capacity");
  }

  QueueEntry entry;
  entry.entry_id = pub->next_entry_id++;
  entry.address = address;
  entry.published_at_ns = now_ns();

  PublishResult result;
  result.entry_id = entry.entry_id;
  for (uint64_t sub_id : topics_[pub->topic].subscribers) {
    const Endpoint * sub = find_endpoint(sub_id);
    if (sub != nullptr && sub->alive && sub->transport == wire::kTransportZeroCopy) {
      entry.pending.insert(sub_id);
      result.pending.push_back(sub_id);
    }
  }

  pub->queue.push_back(std::move(entry));
  if (result.pending.empty()) {
    settle_entry(*pub, result.entry_id, result.emissions);
  }
  return result;
}

Result<Emission> BrokerCore::commit_delivery(
  uint64_t publisher_id, uint64_t entry_id, uint64_t subscriber_id)
{
  Endpoint * pub = find_publisher(publisher_id);
  if (pub == nullptr) {
    return make_error(Errc::unknown_entry, "unknown publisher");
  }
  QueueEntry * entry = find_entry(*pub, entry_id);
  if (entry == nullptr) {
    return make_error(Errc::unknown_entry, "unknown entry");
  }
  if (entry->pending.erase(subscriber_id) == 0) {
    return make_error(Errc::protocol_error, "delivery was not pending");
  }
  entry->delivered.insert(subscriber_id);
  ++entry->holders[subscriber_id];

  wire::Delivery msg;
  msg.subscriber_id = subscriber_id;
  msg.publisher_id = publisher_id;
  msg.entry_id = entry_id;
  msg.address = entry->address;
  msg.arena_name = pub->arena.name;
  return Emission{DeliveryEmission{std::move(msg)}};
}

Result<std::vector<Emission>> BrokerCore::abandon_delivery(
  uint64_t publisher_id, uint64_t entry_id, uint64_t subscriber_id)
{
  Endpoint * pub = find_publisher(publisher_id);
  if (pub == nullptr) {
    return make_error(Errc::unknown_entry, "unknown publisher");
  }
  QueueEntry * entry = find_entry(*pub, entry_id);
  if (entry == nullptr) {
    return make_error(Errc::unknown_entry, "unknown entry");
  }
  if (entry->pending.erase(subscriber_id) == 0) {
    return make_error(Errc::protocol_error, "delivery was not pending");
  }
  std::vector<Emission> emissions;
  settle_entry(*pub, entry_id, emissions);
  return emissions;
}

Status BrokerCore::incr_ref(
  uint64_t client, uint64_t holder_id, uint64_t publisher_id, uint64_t entry_id)
{
  Endpoint * holder = find_endpoint(holder_id);
  if (holder == nullptr || holder->client != client) {
    return make_error(Errc::protocol_error, "holder is not an endpoint of this connection");
  }
  Endpoint * pub = find_publisher(publisher_id);
  if (pub == nullptr) {
    return make_error(Errc::unknown_entry, "unknown publisher");
  }
  QueueEntry * entry = find_entry(*pub, entry_id);
  if (entry == nullptr) {
    return make_error(Errc::unknown_entry, "unknown entry");
  }
  auto it = entry->holders.find(holder_id);
  if (it == entry->holders.end() || it->second == 0) {
    return make_error(Errc::not_holder, "incr_ref without a credited reference");
  }
  ++it->second;
  return Status{};
}

Result<std::vector<Emission>> BrokerCore::decr_ref(
  uint64_t client, uint64_t holder_id, uint64_t publisher_id, uint64_t entry_id)
{
  Endpoint * holder = find_endpoint(holder_id);
  if (holder == nullptr || holder->client != client) {
    return make_error(Errc::protocol_error, "holder is not an endpoint of this connection");
  }
  Endpoint * pub = find_publisher(publisher_id);
  if (pub == nullptr) {
    return make_error(Errc::unknown_entry, "unknown publisher");
  }
  QueueEntry * entry = find_entry(*pub, entry_id);
  if (entry == nullptr) {
    return make_error(Errc::unknown_entry, "unknown entry");
  }
  auto it = entry->holders.find(holder_id);
  if (it == entry->holders.end() || it->second == 0) {
    return make_error(Errc::not_holder, "decr_ref without a credited reference");
  }
  if (--it->second == 0) {
    entry->holders.erase(it);
  }
  std::vector<Emission> emissions;
  settle_entry(*pub, entry_id, emissions);
  return emissions;
}

Result<std::vector<Emission>> BrokerCore::baseline_publish(
  uint64_t client, uint64_t publisher_id, std::vector<uint8_t> payload)
{
  Endpoint * pub = find_publisher(publisher_id);
  if (pub == nullptr || !pub->alive) {
    return make_error(Errc::protocol_error, "unknown publisher");
  }
  if (pub->client != client) {
    return make_error(Errc::protocol_error, "publisher owned by another connection");
  }
  if (pub->transport != wire::kTransportBaseline) {
    return make_error(Errc::protocol_error, "baseline publish on a zero-copy publisher");
  }
  if (payload.size() > options_.max_baseline_bytes) {
    return make_error(Errc::payload_too_large, "baseline payload exceeds the configured max");
  }

  std::vector<Emission> emissions;
  for (uint64_t sub_id : topics_[pub->topic].subscribers) {
    const Endpoint * sub = find_endpoint(sub_id);
    if (sub == nullptr || !sub->alive || sub->transport != wire::kTransportBaseline) {
      continue;
    }
    wire::BaselineDelivery msg;
    msg.subscriber_id = sub_id;
    msg.origin_id = publisher_id;
    msg.payload = payload;
    emissions.push_back(BaselineDeliveryEmission{std::move(msg)});
  }
  return emissions;
}

std::vector<Emission> BrokerCore::process_exit(uint64_t client)
{
  std::vector<Emission> emissions;

  std::set<uint64_t> dead;
  for (auto & [id, ep] : endpoints_) {
    if (ep.client == client && ep.alive) {
      ep.alive = false;
      dead.insert(id);
    }
  }
  if (dead.empty()) {
    return emissions;
  }

  // Settle every entry: dead holders lose their credits, dead subscribers
  // stop being owed deliveries, and a dead publisher's undelivered sends are
  // dropped. Whatever reaches (0 refs, 0 pending) goes away now.
  for (auto & [id, ep] : endpoints_) {
    if (!ep.is_publisher) {
      continue;
    }
    for (size_t i = 0; i < ep.queue.size();) {
      QueueEntry & entry = ep.queue[i];
      for (uint64_t d : dead) {
        entry.pending.erase(d);
        entry.holders.erase(d);
      }
      if (!ep.alive) {
        entry.pending.clear();
      }
      if (entry.ref_count() == 0 && entry.pending.empty()) {
        if (ep.alive) {
          wire::ReclaimNotice notice;
          notice.publisher_id = id;
          notice.entry_id = entry.entry_id;
          emissions.push_back(ReclaimEmission{notice});
        }
        ep.queue.erase(ep.queue.begin() + static_cast<ptrdiff_t>(i));
      } else {
        ++i;
      }
    }
  }

  // The client's arena has no owner anymore; delivered handles stay valid
  // because the object lives on while other processes keep it mapped.
  for (auto it = arenas_.begin(); it != arenas_.end();) {
    if (it->second.owner_client == client) {
      emissions.push_back(UnlinkArenaEmission{it->second.info.name});
      it = arenas_.erase(it);
    } else {
      ++it;
    }
  }
  return emissions;
}

void BrokerCore::settle_entry(Endpoint & pub, uint64_t entry_id, std::vector<Emission> & out)
{
  for (size_t i = 0; i < pub.queue.size(); ++i) {
    QueueEntry & entry = pub.queue[i];
    if (entry.entry_id != entry_id) {
      continue;
    }
    if (entry.ref_count() == 0 && entry.pending.empty()) {
      if (pub.alive) {
        wire::ReclaimNotice notice;
        notice.publisher_id = pub.id;
        notice.entry_id = entry_id;
        out.push_back(ReclaimEmission{notice});
      }
      pub.queue.erase(pub.queue.begin() + static_cast<ptrdiff_t>(i));
    }
    return;
  }
}

std::vector<EntrySnapshot> BrokerCore::entries() const
{
  std::vector<EntrySnapshot> out;
  for (const auto & [id, ep] : endpoints_) {
    if (!ep.is_publisher) {
      continue;
    }
    for (const auto & entry : ep.queue) {
      EntrySnapshot snap;
      snap.publisher_id = id;
      snap.entry_id = entry.entry_id;
      snap.address = entry.address;
      snap.pending.assign(entry.pending.begin(), entry.pending.end());
      snap.delivered.assign(entry.delivered.begin(), entry.delivered.end());
      snap.holders = entry.holders;
      out.push_back(std::move(snap));
    }
  }
  return out;
}

std::string BrokerCore::debug_dump() const
{
  std::ostringstream os;
  os << "broker next_id=" << next_id_ << " next_slot=" << next_slot_ << "\n";
  for (const auto & [pid, slot] : arenas_) {
    os << "arena pid=" << pid << " name=" << slot.info.name << " base=0x" << std::hex
       << slot.info.base << std::dec << " capacity=" << slot.info.capacity
       << " owner=" << slot.owner_client << "\n";
  }
  for (const auto & [name, topic] : topics_) {
    os << "topic " << name << "\n";
    for (uint64_t pub_id : topic.publishers) {
      const auto & ep = endpoints_.at(pub_id);
      os << "  pub id=" << ep.id << " client=" << ep.client << " pid=" << ep.pid
         << " transport=" << (ep.transport == wire::kTransportZeroCopy ? "zc" : "bl")
         << " alive=" << (ep.alive ? 1 : 0) << " next_entry=" << ep.next_entry_id << "\n";
      for (const auto & entry : ep.queue) {
        os << "    entry id=" << entry.entry_id << " addr=0x" << std::hex << entry.address
           << std::dec << " ref=" << entry.ref_count() << " unreceived=" << entry.pending.size()
           << " delivered=[";
        bool first = true;
        for (uint64_t d : entry.delivered) {
          os << (first ? "" : ",") << d;
          first = false;
        }
        os << "] holders={";
        first = true;
        for (const auto & [h, n] : entry.holders) {
          os << (first ? "" : ",") << h << ":" << n;
          first = false;
        }
        os << "}\n";
      }
    }
    for (uint64_t sub_id : topic.subscribers) {
      const auto & ep = endpoints_.at(sub_id);
      os << "  sub id=" << ep.id << " client=" << ep.client << " pid=" << ep.pid
         << " transport=" << (ep.transport == wire::kTransportZeroCopy ? "zc" : "bl")
         << " alive=" << (ep.alive ? 1 : 0) << "\n";
    }
  }
  return os.str();
}

}  // namespace zerocast::broker
