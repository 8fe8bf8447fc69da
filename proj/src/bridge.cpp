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

#include "zerocast/bridge.hpp"

#include <chrono>
#include <cstring>
#include <utility>

#include "zerocast/log.hpp"

namespace zerocast
{

namespace
{

/// Rebuilds `bytes` (a serialized message) inside an arena-backed handle:
/// fixed fields are copied, control blocks re-pointed at fresh buffers.
Status build_arena_message(
  const MessageSchema & schema, const HeapMessage & src, ExclusiveHandle & dst)
{
  std::memcpy(dst.root(), src.root(), schema.fixed_size);
  for (size_t i = 0; i < schema.seqs.size(); ++i) {
    const DynSeq * from = seq_at(schema, src.root(), i);
    *seq_at(schema, dst.root(), i) = DynSeq{0, 0, 0, from->element_size};
    if (from->length != 0) {
      Status st = dst.seq_append(
        i, reinterpret_cast<const void *>(from->data), from->length);
      if (!st.ok()) {
        return st;
      }
    }
  }
  return Status{};
}

}  // namespace

bool should_relay(uint64_t origin_id, const BridgeIdentity & self)
{
  return origin_id != self.zc_publisher_id && origin_id != self.baseline_publisher_id;
}

Result<std::unique_ptr<Bridge>> Bridge::start(const BridgeOptions & options)
{
  std::unique_ptr<Bridge> bridge(new Bridge());
  Status st = bridge->init(options);
  if (!st.ok()) {
    return st;
  }
  return bridge;
}

Status Bridge::init(const BridgeOptions & options)
{
  options_ = options;
  Status valid = validate(*options_.schema);
  if (!valid.ok()) {
    return valid;
  }

  auto context = Context::connect(options_.broker_path);
  if (!context.has_value()) {
    return context.status();
  }
  context_ = *context;

  const bool to_baseline = options_.direction != BridgeOptions::Direction::kBaselineToZc;
  const bool to_zerocopy = options_.direction != BridgeOptions::Direction::kZcToBaseline;

  // Publishers first: every suppression id must exist before a delivery can
  // reach either subscription callback.
  if (to_baseline) {
    auto pub = context_->create_baseline_publisher(options_.topic, *options_.schema);
    if (!pub.has_value()) {
      return pub.status();
    }
    baseline_pub_ = *pub;
    identity_.baseline_publisher_id = baseline_pub_->id();
  }
  if (to_zerocopy) {
    auto pub = context_->create_publisher(options_.topic, *options_.schema);
    if (!pub.has_value()) {
      return pub.status();
    }
    zc_pub_ = *pub;
    identity_.zc_publisher_id = zc_pub_->id();
  }

  relay_ = std::thread([this] {relay_loop();});

  if (to_baseline) {
    auto sub = context_->create_subscription(
      options_.topic, *options_.schema,
      [this](const SharedHandle & handle) {on_zc_delivery(handle);});
    if (!sub.has_value()) {
      stop();
      return sub.status();
    }
    zc_sub_ = *sub;
    identity_.zc_subscriber_id = zc_sub_->id();
  }
  if (to_zerocopy) {
    auto sub = context_->create_baseline_subscription(
      options_.topic, *options_.schema,
      [this](const HeapMessage & message, uint64_t origin_id) {
        on_baseline_delivery(message, origin_id);
      });
    if (!sub.has_value()) {
      stop();
      return sub.status();
    }
    baseline_sub_ = *sub;
    identity_.baseline_subscriber_id = baseline_sub_->id();
  }

  ZC_LOG_INFO(
    "bridge up topic=%s zc_pub=%llu zc_sub=%llu base_pub=%llu base_sub=%llu",
    options_.topic.c_str(),
    static_cast<unsigned long long>(identity_.zc_publisher_id),
    static_cast<unsigned long long>(identity_.zc_subscriber_id),
    static_cast<unsigned long long>(identity_.baseline_publisher_id),
    static_cast<unsigned long long>(identity_.baseline_subscriber_id));
  return Status{};
}

Bridge::~Bridge()
{
  stop();
  if (relay_.joinable()) {
    relay_.join();
  }
}

void Bridge::stop()
{
  {
    std::lock_guard<std::mutex> lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
}

Status Bridge::run()
{
  std::unique_lock<std::mutex> lock(mu_);
  while (!stopping_ && failure_.ok()) {
    if (!context_->alive()) {
      failure_ = Status(Errc::connection_lost, "broker connection lost");
      break;
    }
    cv_.wait_for(lock, std::chrono::milliseconds(100));
  }
  return failure_;
}

BridgeStats Bridge::stats() const
{
  BridgeStats out;
  out.relayed_to_baseline = relayed_to_baseline_.load();
  out.relayed_to_zerocopy = relayed_to_zerocopy_.load();
  out.suppressed = suppressed_.load();
  out.dropped = dropped_.load();
  return out;
}

void Bridge::on_zc_delivery(const SharedHandle & handle)
{
  if (!should_relay(handle.publisher_id(), identity_)) {
    suppressed_.fetch_add(1);
    return;
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    RelayItem item;
    item.to_baseline = true;
    item.handle = handle;  // clone: holds the entry until relayed
    queue_.push_back(std::move(item));
  }
  cv_.notify_all();
}

void Bridge::on_baseline_delivery(const HeapMessage & message, uint64_t origin_id)
{
  if (!should_relay(origin_id, identity_)) {
    suppressed_.fetch_add(1);
    return;
  }
  auto bytes = serialize(*options_.schema, message.root());
  if (!bytes.has_value()) {
    dropped_.fetch_add(1);
    ZC_LOG_ERROR("bridge drop (serialize) topic=%s: %s", options_.topic.c_str(),
      bytes.status().to_string().c_str());
    return;
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    RelayItem item;
    item.bytes = std::move(*bytes);
    queue_.push_back(std::move(item));
  }
  cv_.notify_all();
}

void Bridge::relay_loop()
{
  for (;;) {
    RelayItem item;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [&] {return stopping_ || !queue_.empty();});
      if (stopping_) {
        return;
      }
      item = std::move(queue_.front());
      queue_.pop_front();
    }
    if (item.to_baseline) {
      relay_to_baseline(item.handle);
    } else {
      relay_to_zerocopy(item.bytes);
    }
  }
}

void Bridge::relay_to_baseline(const SharedHandle & handle)
{
  auto bytes = serialize(*options_.schema, handle.root());
  if (!bytes.has_value()) {
    dropped_.fetch_add(1);
    ZC_LOG_ERROR("bridge drop (serialize) topic=%s: %s", options_.topic.c_str(),
      bytes.status().to_string().c_str());
    return;
  }
  Status st = baseline_pub_->publish_bytes(std::move(*bytes));
  if (st.ok()) {
    relayed_to_baseline_.fetch_add(1);
    return;
  }
  if (st.code() == Errc::connection_lost) {
    std::lock_guard<std::mutex> lock(mu_);
    failure_ = st;
    cv_.notify_all();
    return;
  }
  dropped_.fetch_add(1);
  ZC_LOG_ERROR("bridge drop (baseline publish) topic=%s: %s", options_.topic.c_str(),
    st.to_string().c_str());
}

void Bridge::relay_to_zerocopy(const std::vector<uint8_t> & bytes)
{
  auto decoded = deserialize(*options_.schema, bytes.data(), bytes.size());
  if (!decoded.has_value()) {
    dropped_.fetch_add(1);
    ZC_LOG_ERROR("bridge drop (decode) topic=%s: %s", options_.topic.c_str(),
      decoded.status().to_string().c_str());
    return;
  }
  auto message = zc_pub_->allocate();
  if (message.has_value()) {
    Status built = build_arena_message(*options_.schema, *decoded, *message);
    if (!built.ok()) {
      dropped_.fetch_add(1);
      ZC_LOG_ERROR("bridge drop (arena exhausted) topic=%s: %s", options_.topic.c_str(),
        built.to_string().c_str());
      return;
    }
    auto published = zc_pub_->publish(std::move(*message));
    if (published.has_value()) {
      relayed_to_zerocopy_.fetch_add(1);
      return;
    }
    if (published.status().code() == Errc::connection_lost) {
      std::lock_guard<std::mutex> lock(mu_);
      failure_ = published.status();
      cv_.notify_all();
      return;
    }
    dropped_.fetch_add(1);
    ZC_LOG_ERROR("bridge drop (zero-copy publish) topic=%s: %s", options_.topic.c_str(),
      published.status().to_string().c_str());
    return;
  }
  dropped_.fetch_add(1);
  ZC_LOG_ERROR("bridge drop (arena exhausted) topic=%s: %s", options_.topic.c_str(),
    message.status().to_string().c_str());
}

}  // namespace zerocast
