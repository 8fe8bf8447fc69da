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

#ifndef ZEROCAST__BRIDGE_HPP_
#define ZEROCAST__BRIDGE_HPP_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "zerocast/client.hpp"
#include "zerocast/schema.hpp"
#include "zerocast/status.hpp"

namespace zerocast
{

/// Static configuration of a relay between the zero-copy domain and the
/// baseline domain of one topic.
struct BridgeOptions
{
  enum class Direction
  {
    kBoth,
    kZcToBaseline,
    kBaselineToZc,
  };

  std::string topic;
  Direction direction{Direction::kBoth};
  std::string broker_path;  // empty: $ZEROCAST_BROKER, then the default
  const MessageSchema * schema{&pointcloud_like()};
};

/// The bridge's own endpoint ids, fixed at startup. Ids are zero for sides
/// the configured direction does not create.
struct BridgeIdentity
{
  uint64_t zc_publisher_id{0};
  uint64_t zc_subscriber_id{0};
  uint64_t baseline_publisher_id{0};
  uint64_t baseline_subscriber_id{0};
};

struct BridgeStats
{
  uint64_t relayed_to_baseline{0};
  uint64_t relayed_to_zerocopy{0};
  uint64_t suppressed{0};  // own-origin deliveries ignored (loop prevention)
  uint64_t dropped{0};     // relay failures (arena exhaustion, full queue)
};

/// The relay predicate: false iff `origin_id` is one of the bridge's own
/// publisher identities. A second bridge on the same topic suppresses only
/// itself, so such a misconfiguration duplicates traffic rather than looping.
bool should_relay(uint64_t origin_id, const BridgeIdentity & self);

/// A per-topic relay process core: subscribes on both domains, forwards each
/// foreign message to the opposite one exactly once.
///
/// Zero-copy deliveries are cloned into a relay queue and serialized off the
/// dispatch thread; baseline deliveries are re-serialized and rebuilt inside
/// the bridge's own arena ("just another publisher"), which is why that
/// direction bears an extra copy. A single relay thread drains the queue so
/// blocking publishes never run on the dispatch thread.
class Bridge
{
public:
  static Result<std::unique_ptr<Bridge>> start(const BridgeOptions & options);

  ~Bridge();
  Bridge(const Bridge &) = delete;
  Bridge & operator=(const Bridge &) = delete;

  /// Blocks until stop() is called (returns ok) or the broker connection is
  /// lost (returns the error).
  Status run();

  void stop();

  const BridgeIdentity & identity() const {return identity_;}
  const std::string & topic() const {return options_.topic;}

  BridgeStats stats() const;

private:
  struct RelayItem
  {
    bool to_baseline{false};
    SharedHandle handle;         // zero-copy -> baseline
    std::vector<uint8_t> bytes;  // baseline -> zero-copy (serialized payload)
  };

  Bridge() = default;

  Status init(const BridgeOptions & options);
  void on_zc_delivery(const SharedHandle & handle);
  void on_baseline_delivery(const HeapMessage & message, uint64_t origin_id);
  void relay_loop();
  void relay_to_baseline(const SharedHandle & handle);
  void relay_to_zerocopy(const std::vector<uint8_t> & bytes);

  BridgeOptions options_;
  BridgeIdentity identity_;
  std::shared_ptr<Context> context_;
  std::shared_ptr<Publisher> zc_pub_;
  std::shared_ptr<Subscription> zc_sub_;
  std::shared_ptr<BaselinePublisher> baseline_pub_;
  std::shared_ptr<BaselineSubscription> baseline_sub_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<RelayItem> queue_;
  bool stopping_{false};
  Status failure_;  // non-ok once the broker connection is lost
  std::thread relay_;

  std::atomic<uint64_t> relayed_to_baseline_{0};
  std::atomic<uint64_t> relayed_to_zerocopy_{0};
  std::atomic<uint64_t> suppressed_{0};
  std::atomic<uint64_t> dropped_{0};
};

}  // namespace zerocast

#endif  // ZEROCAST__BRIDGE_HPP_
