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

#include "zerocast/client.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

#include "zerocast/log.hpp"

namespace zerocast
{

namespace
{

/// Process-wide table of live arena mappings. A fixed-base mapping can exist
/// only once per process, so when several contexts live in one process (a
/// bridge, tests) they must share it rather than re-map. Entries are weak:
/// a mapping lives exactly as long as some context or handle pins it.
class MappingRegistry
{
public:
  static MappingRegistry & instance()
  {
    static MappingRegistry registry;
    return registry;
  }

  std::shared_ptr<void> find(const std::string & name)
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(name);
    if (it == map_.end()) {
      return nullptr;
    }
    auto live = it->second.lock();
    if (!live) {
      map_.erase(it);
    }
    return live;
  }

  void put(const std::string & name, const std::shared_ptr<void> & mapping)
  {
    std::lock_guard<std::mutex> lock(mu_);
    map_[name] = mapping;
  }

private:
  std::mutex mu_;
  std::map<std::string, std::weak_ptr<void>> map_;
};

}  // namespace

namespace detail
{

/// One awaited (or posted) request in socket order. The dispatch thread
/// completes them front-to-back as reply frames arrive.
struct Pending
{
  bool detached{false};  // reply is consumed silently (clone/drop acks)
  std::mutex mu;
  std::condition_variable cv;
  bool done{false};
  bool failed{false};
  Status error;
  wire::Frame reply;
};

struct PubState
{
  uint64_t id{0};
  std::string topic;
  const MessageSchema * schema{nullptr};
  std::shared_ptr<Arena> arena;

  std::mutex mu;
  std::map<uint64_t, uint64_t> outstanding;  // entry_id -> root address
  std::set<uint64_t> early_reclaims;         // notices that beat the publish reply

  /// Returns the arena memory of a published message: every sequence buffer,
  /// then the root itself.
  void reclaim(uint64_t entry_id)
  {
    uint64_t root = 0;
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = outstanding.find(entry_id);
      if (it == outstanding.end()) {
        early_reclaims.insert(entry_id);
        return;
      }
      root = it->second;
      outstanding.erase(it);
    }
    release_message(root);
  }

  void release_message(uint64_t root)
  {
    for (size_t i = 0; i < schema->seqs.size(); ++i) {
      const DynSeq * seq = seq_at(*schema, arena->at(root), i);
      if (seq->data != 0) {
        Status st = arena->dealloc(seq->data);
        if (!st.ok()) {
          ZC_LOG_ERROR("seq buffer dealloc failed topic=%s: %s",
            topic.c_str(), st.to_string().c_str());
        }
      }
    }
    Status st = arena->dealloc(root);
    if (!st.ok()) {
      ZC_LOG_ERROR("root dealloc failed topic=%s: %s", topic.c_str(), st.to_string().c_str());
    }
  }
};

struct SubState
{
  uint64_t id{0};
  std::string topic;
  const MessageSchema * schema{nullptr};
  Subscription::Callback callback;
  std::atomic<bool> active{true};
  std::atomic<uint64_t> delivery_errors{0};
};

struct BaselineSubState
{
  uint64_t id{0};
  std::string topic;
  const MessageSchema * schema{nullptr};
  BaselineSubscription::Callback callback;
  std::atomic<bool> active{true};
  std::atomic<uint64_t> delivery_errors{0};
};

}  // namespace detail

using detail::Pending;

// ---------------------------------------------------------------------------
// SharedHandle

SharedHandle::SharedHandle(
  std::weak_ptr<Context> context, std::shared_ptr<void> keepalive,
  uint64_t holder_id, uint64_t publisher_id, uint64_t entry_id, uint64_t address)
: context_(std::move(context)), keepalive_(std::move(keepalive)), holder_id_(holder_id),
  publisher_id_(publisher_id), entry_id_(entry_id), address_(address)
{
}

SharedHandle::SharedHandle(const SharedHandle & other)
: context_(other.context_), keepalive_(other.keepalive_), holder_id_(other.holder_id_),
  publisher_id_(other.publisher_id_), entry_id_(other.entry_id_), address_(other.address_)
{
  if (address_ != 0) {
    if (auto context = context_.lock()) {
      context->post_ref(true, holder_id_, publisher_id_, entry_id_);
    }
  }
}

SharedHandle & SharedHandle::operator=(const SharedHandle & other)
{
  if (this != &other) {
    SharedHandle copy(other);
    *this = std::move(copy);
  }
  return *this;
}

SharedHandle::SharedHandle(SharedHandle && other) noexcept
: context_(std::move(other.context_)), keepalive_(std::move(other.keepalive_)),
  holder_id_(other.holder_id_), publisher_id_(other.publisher_id_),
  entry_id_(other.entry_id_), address_(other.address_)
{
  other.address_ = 0;
}

SharedHandle & SharedHandle::operator=(SharedHandle && other) noexcept
{
  if (this != &other) {
    drop();
    context_ = std::move(other.context_);
    keepalive_ = std::move(other.keepalive_);
    holder_id_ = other.holder_id_;
    publisher_id_ = other.publisher_id_;
    entry_id_ = other.entry_id_;
    address_ = other.address_;
    other.address_ = 0;
  }
  return *this;
}

SharedHandle::~SharedHandle() {drop();}

void SharedHandle::drop()
{
  if (address_ == 0) {
    return;
  }
  address_ = 0;
  if (auto context = context_.lock()) {
    context->post_ref(false, holder_id_, publisher_id_, entry_id_);
  }
  // With the session gone the broker has already reconciled this credit via
  // process-exit handling; dropping is purely local then.
  keepalive_.reset();
}

// ---------------------------------------------------------------------------
// ExclusiveHandle

ExclusiveHandle::ExclusiveHandle(std::shared_ptr<detail::PubState> pub, uint64_t address)
: pub_(std::move(pub)), address_(address)
{
}

ExclusiveHandle::ExclusiveHandle(ExclusiveHandle && other) noexcept
: pub_(std::move(other.pub_)), address_(other.address_)
{
  other.address_ = 0;
}

ExclusiveHandle & ExclusiveHandle::operator=(ExclusiveHandle && other) noexcept
{
  if (this != &other) {
    discard();
    pub_ = std::move(other.pub_);
    address_ = other.address_;
    other.address_ = 0;
  }
  return *this;
}

ExclusiveHandle::~ExclusiveHandle() {discard();}

void ExclusiveHandle::discard()
{
  if (address_ == 0) {
    return;
  }
  pub_->release_message(address_);
  address_ = 0;
}

const MessageSchema & ExclusiveHandle::schema() const {return *pub_->schema;}

Status ExclusiveHandle::seq_push(size_t seq_index, const void * element)
{
  return seq_append(seq_index, element, 1);
}

Status ExclusiveHandle::seq_append(size_t seq_index, const void * elements, uint64_t count)
{
  if (address_ == 0) {
    return Status(Errc::invalid_argument, "message already published or discarded");
  }
  if (seq_index >= pub_->schema->seqs.size()) {
    return Status(Errc::invalid_argument, "no such sequence field");
  }
  DynSeq * seq = seq_at(*pub_->schema, root(), seq_index);
  const uint64_t element_size = seq->element_size;

  if (seq->length + count > seq->capacity) {
    uint64_t new_capacity = seq->capacity == 0 ? DynSeq::kInitialCapacity : seq->capacity;
    while (new_capacity < seq->length + count) {
      new_capacity *= 2;
    }
    uint64_t moved = 0;
    if (seq->data == 0) {
      auto grown = pub_->arena->alloc(new_capacity * element_size);
      if (!grown.has_value()) {
        return grown.status();
      }
      moved = *grown;
    } else {
      auto grown = pub_->arena->realloc(seq->data, new_capacity * element_size);
      if (!grown.has_value()) {
        return grown.status();  // buffer untouched at its previous size
      }
      moved = *grown;
    }
    seq->data = moved;
    seq->capacity = new_capacity;
  }

  std::memcpy(
    reinterpret_cast<uint8_t *>(seq->data) + seq->length * element_size,
    elements, count * element_size);
  seq->length += count;
  return Status{};
}

// ---------------------------------------------------------------------------
// Publisher

Publisher::Publisher(std::shared_ptr<Context> context, std::shared_ptr<detail::PubState> state)
: context_(std::move(context)), state_(std::move(state))
{
}

uint64_t Publisher::id() const {return state_->id;}
const std::string & Publisher::topic() const {return state_->topic;}
const MessageSchema & Publisher::schema() const {return *state_->schema;}
ArenaStats Publisher::arena_stats() const {return state_->arena->stats();}

Result<ExclusiveHandle> Publisher::allocate()
{
  auto root = state_->arena->alloc(state_->schema->fixed_size);
  if (!root.has_value()) {
    return root.status();
  }
  auto * bytes = static_cast<uint8_t *>(state_->arena->at(*root));
  std::memset(bytes, 0, state_->schema->fixed_size);
  for (size_t i = 0; i < state_->schema->seqs.size(); ++i) {
    *seq_at(*state_->schema, bytes, i) =
      DynSeq{0, 0, 0, state_->schema->seqs[i].element_size};
  }
  return ExclusiveHandle(state_, *root);
}

Result<uint64_t> Publisher::publish(ExclusiveHandle && message)
{
  if (!message) {
    return Status(Errc::invalid_argument, "publish of an empty handle");
  }
  if (message.pub_ != state_) {
    return Status(Errc::invalid_argument, "message belongs to another publisher");
  }
  auto reply = context_->request(
    wire::kPublishEntry, wire::encode(wire::PublishRequest{state_->id, message.address()}));
  if (!reply.has_value()) {
    return reply.status();  // e.g. queue full: the message stays publishable
  }
  auto decoded = wire::decode_publish_reply(reply->payload);
  if (!decoded.has_value()) {
    return Status(Errc::protocol_error, "malformed publish reply");
  }

  const uint64_t root = message.address_;
  message.address_ = 0;  // consumed: entry memory now owned by the broker entry
  {
    std::lock_guard<std::mutex> lock(state_->mu);
    if (state_->early_reclaims.erase(decoded->entry_id) == 0) {
      state_->outstanding[decoded->entry_id] = root;
      ZC_LOG_DEBUG("published topic=%s entry_id=%llu", state_->topic.c_str(),
        static_cast<unsigned long long>(decoded->entry_id));
      return decoded->entry_id;
    }
  }
  // The reclaim notice arrived before the publish reply was processed (for
  // instance a publish with no subscribers): release immediately.
  state_->release_message(root);
  return decoded->entry_id;
}

// ---------------------------------------------------------------------------
// Subscription

Subscription::Subscription(
  std::shared_ptr<Context> context, std::shared_ptr<detail::SubState> state)
: context_(std::move(context)), state_(std::move(state))
{
}

Subscription::~Subscription()
{
  // Future deliveries are dropped (their credit returned) by the dispatcher.
  state_->active.store(false);
}

uint64_t Subscription::id() const {return state_->id;}
const std::string & Subscription::topic() const {return state_->topic;}
uint64_t Subscription::delivery_errors() const {return state_->delivery_errors.load();}

// ---------------------------------------------------------------------------
// Baseline endpoints

BaselinePublisher::BaselinePublisher(
  std::shared_ptr<Context> context, uint64_t id, std::string topic,
  const MessageSchema * schema)
: context_(std::move(context)), id_(id), topic_(std::move(topic)), schema_(schema)
{
}

Status BaselinePublisher::publish(const void * root)
{
  auto bytes = serialize(*schema_, root);
  if (!bytes.has_value()) {
    return bytes.status();
  }
  return publish_bytes(std::move(*bytes));
}

Status BaselinePublisher::publish_bytes(std::vector<uint8_t> bytes)
{
  auto reply = context_->request(
    wire::kBaselinePublish, wire::encode(wire::BaselinePublish{id_, std::move(bytes)}));
  return reply.has_value() ? Status{} : reply.status();
}

BaselineSubscription::BaselineSubscription(
  std::shared_ptr<Context> context, std::shared_ptr<detail::BaselineSubState> state)
: context_(std::move(context)), state_(std::move(state))
{
}

BaselineSubscription::~BaselineSubscription() {state_->active.store(false);}

uint64_t BaselineSubscription::id() const {return state_->id;}
uint64_t BaselineSubscription::delivery_errors() const
{
  return state_->delivery_errors.load();
}

// ---------------------------------------------------------------------------
// Context: connection management

Result<std::shared_ptr<Context>> Context::connect(const std::string & broker_path)
{
  std::shared_ptr<Context> context(new Context());
  Status st = context->open(broker_path);
  if (!st.ok()) {
    return st;
  }
  return context;
}

Status Context::open(const std::string & broker_path)
{
  const std::string path = wire::resolve_socket_path(broker_path);
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path)) {
    return Status(Errc::invalid_argument, "socket path too long: " + path);
  }
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);

  fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) {
    return Status(Errc::io_error, std::string("socket: ") + strerror(errno));
  }
  if (::connect(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0) {
    Status st(Errc::connection_lost, "broker unreachable at " + path);
    ::close(fd_);
    fd_ = -1;
    return st;
  }
  dispatcher_ = std::thread([this] {dispatch_loop();});
  dispatcher_id_ = dispatcher_.get_id();
  return Status{};
}

Context::~Context()
{
  dead_.store(true);
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
  }
  if (dispatcher_.joinable()) {
    dispatcher_.join();
  }
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

bool Context::send_locked(const std::vector<uint8_t> & bytes)
{
  size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) {
        continue;
      }
      return false;
    }
    off += static_cast<size_t>(n);
  }
  return true;
}

Result<wire::Frame> Context::request(uint8_t opcode, const std::vector<uint8_t> & payload)
{
  if (std::this_thread::get_id() == dispatcher_id_) {
    return Status(
      Errc::protocol_error, "blocking request from the dispatch thread (use clone/drop only)");
  }
  if (dead_.load()) {
    return Status(Errc::connection_lost, "broker session closed");
  }
  auto pending = std::make_shared<Pending>();
  {
    std::lock_guard<std::mutex> lock(send_mu_);
    pending_.push_back(pending);
    if (!send_locked(wire::encode_frame(opcode, payload))) {
      pending_.pop_back();
      dead_.store(true);
      return Status(Errc::connection_lost, "broker session lost on send");
    }
  }
  std::unique_lock<std::mutex> lock(pending->mu);
  pending->cv.wait(lock, [&] {return pending->done;});
  if (pending->failed) {
    return pending->error;
  }
  return std::move(pending->reply);
}

void Context::post(uint8_t opcode, const std::vector<uint8_t> & payload)
{
  if (dead_.load()) {
    return;  // local-only from here on; the broker reconciles via process exit
  }
  auto pending = std::make_shared<Pending>();
  pending->detached = true;
  std::lock_guard<std::mutex> lock(send_mu_);
  pending_.push_back(pending);
  if (!send_locked(wire::encode_frame(opcode, payload))) {
    pending_.pop_back();
    dead_.store(true);
  }
}

void Context::post_ref(bool incr, uint64_t holder, uint64_t publisher, uint64_t entry)
{
  post(
    incr ? wire::kIncrRef : wire::kDecrRef,
    wire::encode(wire::RefRequest{holder, publisher, entry}));
}

void Context::fail_all_pending()
{
  std::deque<std::shared_ptr<Pending>> orphaned;
  {
    std::lock_guard<std::mutex> lock(send_mu_);
    orphaned.swap(pending_);
  }
  for (auto & pending : orphaned) {
    std::lock_guard<std::mutex> lock(pending->mu);
    pending->failed = true;
    pending->error = Status(Errc::connection_lost, "broker session closed");
    pending->done = true;
    pending->cv.notify_all();
  }
}

void Context::dispatch_loop()
{
  wire::FrameParser parser;
  char buf[65536];
  for (;;) {
    const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n == 0 || (n < 0 && errno != EINTR)) {
      break;
    }
    if (n < 0) {
      continue;
    }
    parser.feed(buf, static_cast<size_t>(n));
    while (auto frame = parser.next()) {
      switch (frame->opcode) {
        case wire::kRegisterPublisher:
        case wire::kRegisterSubscriber:
        case wire::kPublishEntry:
        case wire::kIncrRef:
        case wire::kDecrRef:
        case wire::kBaselinePublish:
        case wire::kError: {
            std::shared_ptr<Pending> pending;
            {
              std::lock_guard<std::mutex> lock(send_mu_);
              if (!pending_.empty()) {
                pending = pending_.front();
                pending_.pop_front();
              }
            }
            if (!pending) {
              ZC_LOG_WARN("unsolicited reply frame opcode=%u", frame->opcode);
              break;
            }
            Status error;
            if (frame->opcode == wire::kError) {
              auto decoded = wire::decode_error(frame->payload);
              error = decoded.has_value() ?
                Status(static_cast<Errc>(decoded->code), decoded->message) :
                Status(Errc::protocol_error, "undecodable error frame");
            }
            if (pending->detached) {
              if (!error.ok()) {
                ZC_LOG_ERROR("ref operation rejected: %s", error.to_string().c_str());
              }
              break;
            }
            std::lock_guard<std::mutex> lock(pending->mu);
            pending->failed = !error.ok();
            pending->error = std::move(error);
            pending->reply = std::move(*frame);
            pending->done = true;
            pending->cv.notify_all();
            break;
          }
        default:
          handle_async(*frame);
          break;
      }
    }
    if (parser.violated()) {
      ZC_LOG_ERROR("broker stream corrupt; closing session");
      break;
    }
  }
  dead_.store(true);
  fail_all_pending();
}

void Context::handle_async(const wire::Frame & frame)
{
  switch (frame.opcode) {
    case wire::kDelivery: {
        auto delivery = wire::decode_delivery(frame.payload);
        if (delivery.has_value()) {
          on_delivery(*delivery);
        }
        return;
      }
    case wire::kReclaimNotice: {
        auto notice = wire::decode_reclaim_notice(frame.payload);
        if (notice.has_value()) {
          on_reclaim(*notice);
        }
        return;
      }
    case wire::kArenaAnnounce: {
        auto announce = wire::decode_arena_announce(frame.payload);
        if (announce.has_value()) {
          on_announce(*announce);
        }
        return;
      }
    case wire::kBaselineDelivery: {
        auto delivery = wire::decode_baseline_delivery(frame.payload);
        if (delivery.has_value()) {
          on_baseline_delivery(*delivery);
        }
        return;
      }
    default:
      ZC_LOG_WARN("unexpected frame opcode=%u", frame.opcode);
      return;
  }
}

void Context::on_delivery(const wire::Delivery & delivery)
{
  std::shared_ptr<detail::SubState> state;
  std::shared_ptr<void> keepalive;
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    auto it = subscriptions_.find(delivery.subscriber_id);
    if (it != subscriptions_.end()) {
      state = it->second;
    }
    keepalive = resolve_keepalive(delivery.arena_name);
  }
  if (!state || !state->active.load()) {
    // Late delivery for a dead subscription: return the credit right away.
    post_ref(false, delivery.subscriber_id, delivery.publisher_id, delivery.entry_id);
    return;
  }
  if (!keepalive) {
    state->delivery_errors.fetch_add(1);
    ZC_LOG_ERROR("delivery undeliverable topic=%s entry_id=%llu: arena %s not attached",
      state->topic.c_str(), static_cast<unsigned long long>(delivery.entry_id),
      delivery.arena_name.c_str());
    post_ref(false, delivery.subscriber_id, delivery.publisher_id, delivery.entry_id);
    return;
  }

  SharedHandle handle(
    weak_from_this(), std::move(keepalive), delivery.subscriber_id,
    delivery.publisher_id, delivery.entry_id, delivery.address);
  try {
    state->callback(handle);
  } catch (const std::exception & e) {
    state->delivery_errors.fetch_add(1);
    ZC_LOG_ERROR("subscriber callback threw topic=%s entry_id=%llu: %s",
      state->topic.c_str(), static_cast<unsigned long long>(delivery.entry_id), e.what());
  }
  // `handle` drops here, returning the delivery credit unless the callback
  // kept a clone.
}

void Context::on_reclaim(const wire::ReclaimNotice & notice)
{
  std::shared_ptr<detail::PubState> state;
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    auto it = publishers_.find(notice.publisher_id);
    if (it != publishers_.end()) {
      state = it->second;
    }
  }
  if (!state) {
    ZC_LOG_ERROR("reclaim notice for unknown publisher_id=%llu",
      static_cast<unsigned long long>(notice.publisher_id));
    return;
  }
  ZC_LOG_DEBUG("reclaim topic=%s entry_id=%llu", state->topic.c_str(),
    static_cast<unsigned long long>(notice.entry_id));
  state->reclaim(notice.entry_id);
}

void Context::on_announce(const wire::ArenaAnnounce & announce)
{
  std::lock_guard<std::mutex> lock(state_mu_);
  attach_arena(announce.arena);
}

void Context::on_baseline_delivery(const wire::BaselineDelivery & delivery)
{
  std::shared_ptr<detail::BaselineSubState> state;
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    auto it = baseline_subs_.find(delivery.subscriber_id);
    if (it != baseline_subs_.end()) {
      state = it->second;
    }
  }
  if (!state || !state->active.load()) {
    return;  // baseline deliveries hold no credits; nothing to return
  }
  auto message = deserialize(*state->schema, delivery.payload.data(), delivery.payload.size());
  if (!message.has_value()) {
    state->delivery_errors.fetch_add(1);
    ZC_LOG_ERROR("baseline payload undecodable topic=%s origin=%llu: %s",
      state->topic.c_str(), static_cast<unsigned long long>(delivery.origin_id),
      message.status().to_string().c_str());
    return;
  }
  try {
    state->callback(*message, delivery.origin_id);
  } catch (const std::exception & e) {
    state->delivery_errors.fetch_add(1);
    ZC_LOG_ERROR("baseline callback threw topic=%s: %s", state->topic.c_str(), e.what());
  }
}

// ---------------------------------------------------------------------------
// Context: arenas

Status Context::ensure_arena(const wire::ArenaInfo & info)
{
  std::lock_guard<std::mutex> lock(state_mu_);
  if (arena_) {
    const auto & desc = arena_->descriptor();
    if (desc.name != info.name || desc.base != info.base || desc.capacity != info.capacity) {
      return Status(Errc::arena_conflict, "broker assigned a different arena slot");
    }
    return Status{};
  }
  auto created = Arena::create(info.name, info.base, info.capacity);
  if (!created.has_value()) {
    return created.status();
  }
  arena_ = std::make_shared<Arena>(std::move(*created));
  MappingRegistry::instance().put(info.name, arena_);
  ZC_LOG_INFO("arena created name=%s base=0x%llx capacity=%llu", info.name.c_str(),
    static_cast<unsigned long long>(info.base), static_cast<unsigned long long>(info.capacity));
  return Status{};
}

void Context::attach_arena(const wire::ArenaInfo & info)
{
  known_arenas_[info.name] = info;
  if (arena_ && arena_->descriptor().name == info.name) {
    return;  // our own arena: reads go through the writable mapping
  }
  if (views_.count(info.name) != 0) {
    return;  // already attached
  }
  auto & registry = MappingRegistry::instance();
  if (auto existing = registry.find(info.name)) {
    views_[info.name] = existing;  // another context already mapped it
    return;
  }
  auto view = ArenaView::attach(info.name, info.base, info.capacity);
  if (!view.has_value()) {
    if (auto existing = registry.find(info.name)) {
      views_[info.name] = existing;  // lost an attach race to a sibling
      return;
    }
    // Benign when the announce raced the owner's shm creation: the attach is
    // retried by resolve_keepalive once a message actually arrives.
    ZC_LOG_DEBUG("arena attach deferred name=%s: %s", info.name.c_str(),
      view.status().to_string().c_str());
    return;
  }
  auto shared = std::make_shared<ArenaView>(std::move(*view));
  views_[info.name] = shared;
  registry.put(info.name, shared);
}

std::shared_ptr<void> Context::resolve_keepalive(const std::string & arena_name)
{
  if (arena_ && arena_->descriptor().name == arena_name) {
    return arena_;
  }
  auto it = views_.find(arena_name);
  if (it != views_.end()) {
    return it->second;
  }
  auto known = known_arenas_.find(arena_name);
  if (known == known_arenas_.end()) {
    return nullptr;  // never announced: nothing to attach
  }
  attach_arena(known->second);
  it = views_.find(arena_name);
  return it != views_.end() ? it->second : nullptr;
}

// ---------------------------------------------------------------------------
// Context: endpoint factories

Result<std::shared_ptr<Publisher>> Context::create_publisher(
  const std::string & topic, const MessageSchema & schema)
{
  Status valid = validate(schema);
  if (!valid.ok()) {
    return valid;
  }
  auto reply = request(
    wire::kRegisterPublisher,
    wire::encode(
      wire::RegisterRequest{static_cast<uint64_t>(getpid()), wire::kTransportZeroCopy, topic}));
  if (!reply.has_value()) {
    return reply.status();
  }
  auto decoded = wire::decode_register_publisher_reply(reply->payload);
  if (!decoded.has_value()) {
    return Status(Errc::protocol_error, "malformed register reply");
  }
  Status arena_ok = ensure_arena(decoded->arena);
  if (!arena_ok.ok()) {
    return arena_ok;
  }

  auto state = std::make_shared<detail::PubState>();
  state->id = decoded->publisher_id;
  state->topic = topic;
  state->schema = &schema;
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    state->arena = arena_;
    publishers_[state->id] = state;
  }
  ZC_LOG_INFO("publisher registered topic=%s id=%llu", topic.c_str(),
    static_cast<unsigned long long>(state->id));
  return std::shared_ptr<Publisher>(new Publisher(shared_from_this(), state));
}

Result<std::shared_ptr<Subscription>> Context::create_subscription(
  const std::string & topic, const MessageSchema & schema, Subscription::Callback callback)
{
  Status valid = validate(schema);
  if (!valid.ok()) {
    return valid;
  }
  auto reply = request(
    wire::kRegisterSubscriber,
    wire::encode(
      wire::RegisterRequest{static_cast<uint64_t>(getpid()), wire::kTransportZeroCopy, topic}));
  if (!reply.has_value()) {
    return reply.status();
  }
  auto decoded = wire::decode_register_subscriber_reply(reply->payload);
  if (!decoded.has_value()) {
    return Status(Errc::protocol_error, "malformed register reply");
  }

  auto state = std::make_shared<detail::SubState>();
  state->id = decoded->subscriber_id;
  state->topic = topic;
  state->schema = &schema;
  state->callback = std::move(callback);
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    for (const auto & info : decoded->arenas) {
      attach_arena(info);
    }
    subscriptions_[state->id] = state;
  }
  ZC_LOG_INFO("subscription registered topic=%s id=%llu", topic.c_str(),
    static_cast<unsigned long long>(state->id));
  return std::shared_ptr<Subscription>(new Subscription(shared_from_this(), state));
}

Result<std::shared_ptr<BaselinePublisher>> Context::create_baseline_publisher(
  const std::string & topic, const MessageSchema & schema)
{
  Status valid = validate(schema);
  if (!valid.ok()) {
    return valid;
  }
  auto reply = request(
    wire::kRegisterPublisher,
    wire::encode(
      wire::RegisterRequest{static_cast<uint64_t>(getpid()), wire::kTransportBaseline, topic}));
  if (!reply.has_value()) {
    return reply.status();
  }
  auto decoded = wire::decode_register_publisher_reply(reply->payload);
  if (!decoded.has_value()) {
    return Status(Errc::protocol_error, "malformed register reply");
  }
  return std::shared_ptr<BaselinePublisher>(
    new BaselinePublisher(shared_from_this(), decoded->publisher_id, topic, &schema));
}

Result<std::shared_ptr<BaselineSubscription>> Context::create_baseline_subscription(
  const std::string & topic, const MessageSchema & schema,
  BaselineSubscription::Callback callback)
{
  Status valid = validate(schema);
  if (!valid.ok()) {
    return valid;
  }
  auto reply = request(
    wire::kRegisterSubscriber,
    wire::encode(
      wire::RegisterRequest{static_cast<uint64_t>(getpid()), wire::kTransportBaseline, topic}));
  if (!reply.has_value()) {
    return reply.status();
  }
  auto decoded = wire::decode_register_subscriber_reply(reply->payload);
  if (!decoded.has_value()) {
    return Status(Errc::protocol_error, "malformed register reply");
  }
  auto state = std::make_shared<detail::BaselineSubState>();
  state->id = decoded->subscriber_id;
  state->topic = topic;
  state->schema = &schema;
  state->callback = std::move(callback);
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    baseline_subs_[state->id] = state;
  }
  return std::shared_ptr<BaselineSubscription>(
    new BaselineSubscription(shared_from_this(), state));
}

}  // namespace zerocast
