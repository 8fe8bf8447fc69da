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

#include "zerocast/arena.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <set>

#include "zerocast/log.hpp"

namespace zerocast
{

namespace
{

// On-disk header at offset 0 of every arena object (little-endian, packed):
// magic "ZCAR", version u16, base u64, capacity u64.
constexpr char kArenaMagic[4] = {'Z', 'C', 'A', 'R'};
constexpr uint16_t kArenaVersion = 1;
constexpr uint64_t kHeaderBytes = 22;

// Allocator geometry. Every block (free or allocated) starts 16-aligned, is
// a multiple of 16 bytes, and is at least kMinBlock. Allocated blocks carry
// a 16-byte header immediately before the payload.
constexpr uint64_t kAlignMin = 16;
constexpr uint64_t kBlockHeader = 16;
constexpr uint64_t kMinBlock = 32;
constexpr uint32_t kAllocMagic = 0xA110CA7Eu;
constexpr uint64_t kMetadataBytes = 64;  // arena header + allocator control

constexpr uint8_t kPoisonByte = 0xDD;

uint64_t align_up(uint64_t v, uint64_t a) {return (v + a - 1) & ~(a - 1);}

bool is_pow2(uint64_t v) {return v != 0 && (v & (v - 1)) == 0;}

uint64_t page_size() {return static_cast<uint64_t>(sysconf(_SC_PAGESIZE));}

std::string shm_path(const std::string & name) {return "/" + name;}

struct AllocatedHeader
{
  uint64_t size;   // full block size including this header
  uint32_t magic;  // kAllocMagic while live
  uint32_t reserved;
};
static_assert(sizeof(AllocatedHeader) == kBlockHeader);

struct FreeNode
{
  uint64_t size;  // full block size
  uint64_t next;  // address of next free block, 0 terminates; address-ordered
};
static_assert(sizeof(FreeNode) == kBlockHeader);

void write_header(void * base, uint64_t base_addr, uint64_t capacity)
{
  auto * p = static_cast<uint8_t *>(base);
  std::memcpy(p, kArenaMagic, 4);
  uint16_t ver = kArenaVersion;
  std::memcpy(p + 4, &ver, 2);
  std::memcpy(p + 6, &base_addr, 8);
  std::memcpy(p + 14, &capacity, 8);
}

bool read_header(const void * base, uint64_t * base_addr, uint64_t * capacity)
{
  const auto * p = static_cast<const uint8_t *>(base);
  if (std::memcmp(p, kArenaMagic, 4) != 0) {
    return false;
  }
  uint16_t ver = 0;
  std::memcpy(&ver, p + 4, 2);
  if (ver != kArenaVersion) {
    return false;
  }
  std::memcpy(base_addr, p + 6, 8);
  std::memcpy(capacity, p + 14, 8);
  return true;
}

}  // namespace

static_assert(kHeaderBytes <= kMetadataBytes - 24, "control block must fit after header");

std::string default_arena_name(uint64_t pid)
{
  return "zerocast." + std::to_string(pid);
}

// Lives at offset 24 inside the arena (after the 22-byte header, 8-aligned).
struct Arena::AllocatorControl
{
  uint64_t free_head;        // address of first free block, 0 if none
  uint64_t free_bytes;
  uint64_t allocated_bytes;  // block totals, headers included
  uint64_t allocated_blocks;
};

Arena::AllocatorControl * Arena::control()
{
  static_assert(sizeof(AllocatorControl) <= kMetadataBytes - 24);
  return reinterpret_cast<AllocatorControl *>(desc_.base + 24);
}

const Arena::AllocatorControl * Arena::control() const
{
  return reinterpret_cast<const AllocatorControl *>(desc_.base + 24);
}

uint64_t Arena::heap_start() const {return desc_.base + kMetadataBytes;}

Result<Arena> Arena::create(const std::string & name, uint64_t base, uint64_t capacity)
{
  return create(name, base, capacity, Options{});
}

Result<Arena> Arena::create(
  const std::string & name, uint64_t base, uint64_t capacity, Options options)
{
  const uint64_t page = page_size();
  if (base == 0 || base % page != 0) {
    return make_error(Errc::invalid_argument, "base must be page-aligned and nonzero");
  }
  if (capacity < kMinArenaCapacity || capacity % page != 0) {
    return make_error(
      Errc::invalid_argument, "capacity must be >= 1 MiB and a multiple of the page size");
  }

  int fd = ::shm_open(shm_path(name).c_str(), O_CREAT | O_RDWR | O_EXCL, 0600);
  if (fd < 0) {
    if (errno == EEXIST) {
      return make_error(Errc::name_collision, "shared-memory object exists: " + name);
    }
    if (errno == EACCES || errno == EPERM) {
      return make_error(Errc::permission_denied, name);
    }
    return make_error(Errc::io_error, std::string("shm_open: ") + strerror(errno));
  }
  if (::ftruncate(fd, static_cast<off_t>(capacity)) != 0) {
    int e = errno;
    ::close(fd);
    ::shm_unlink(shm_path(name).c_str());
    return make_error(Errc::io_error, std::string("ftruncate: ") + strerror(e));
  }

  // The mapping lands at exactly `base` or the create fails; never relocate,
  // since every participant must use identical addresses.
  void * p = ::mmap(
    reinterpret_cast<void *>(base), capacity, PROT_READ | PROT_WRITE,
    MAP_SHARED | MAP_FIXED_NOREPLACE, fd, 0);
  int map_errno = errno;
  ::close(fd);
  if (p == MAP_FAILED) {
    ::shm_unlink(shm_path(name).c_str());
    if (map_errno == EEXIST) {
      return make_error(Errc::range_occupied, "requested range already mapped");
    }
    return make_error(Errc::io_error, std::string("mmap: ") + strerror(map_errno));
  }
  if (reinterpret_cast<uint64_t>(p) != base) {
    // Old kernels ignore FIXED_NOREPLACE and relocate; treat as occupied.
    ::munmap(p, capacity);
    ::shm_unlink(shm_path(name).c_str());
    return make_error(Errc::range_occupied, "kernel relocated the mapping");
  }

  Arena arena;
  arena.desc_ = ArenaDescriptor{name, base, capacity, static_cast<uint64_t>(getpid())};
  arena.options_ = options;

  write_header(p, base, capacity);
  auto * ctl = arena.control();
  const uint64_t heap_bytes = capacity - kMetadataBytes;
  ctl->free_head = arena.heap_start();
  ctl->free_bytes = heap_bytes;
  ctl->allocated_bytes = 0;
  ctl->allocated_blocks = 0;
  auto * first = reinterpret_cast<FreeNode *>(arena.heap_start());
  first->size = heap_bytes;
  first->next = 0;

  return arena;
}

Arena::~Arena() {close();}

Arena::Arena(Arena && other) noexcept
: desc_(std::move(other.desc_)), options_(other.options_)
{
  other.desc_ = ArenaDescriptor{};
}

Arena & Arena::operator=(Arena && other) noexcept
{
  if (this != &other) {
    close();
    desc_ = std::move(other.desc_);
    options_ = other.options_;
    other.desc_ = ArenaDescriptor{};
  }
  return *this;
}

void Arena::close()
{
  if (desc_.base != 0) {
    ::munmap(reinterpret_cast<void *>(desc_.base), desc_.capacity);
    if (options_.unlink_on_close) {
      ::shm_unlink(shm_path(desc_.name).c_str());
    }
    desc_ = ArenaDescriptor{};
  }
}

Result<ArenaView> ArenaView::attach(
  const std::string & name, uint64_t base, uint64_t capacity)
{
  int fd = ::shm_open(shm_path(name).c_str(), O_RDONLY, 0);
  if (fd < 0) {
    if (errno == ENOENT) {
      return make_error(Errc::object_missing, name);
    }
    return make_error(Errc::io_error, std::string("shm_open: ") + strerror(errno));
  }

  // Verify the owner's recorded base before touching the fixed range.
  const uint64_t page = page_size();
  void * probe = ::mmap(nullptr, page, PROT_READ, MAP_SHARED, fd, 0);
  if (probe == MAP_FAILED) {
    int e = errno;
    ::close(fd);
    return make_error(Errc::io_error, std::string("mmap probe: ") + strerror(e));
  }
  uint64_t hdr_base = 0;
  uint64_t hdr_capacity = 0;
  bool hdr_ok = read_header(probe, &hdr_base, &hdr_capacity);
  ::munmap(probe, page);
  if (!hdr_ok) {
    ::close(fd);
    return make_error(Errc::protocol_error, "not a zerocast arena: " + name);
  }
  if (hdr_base != base || hdr_capacity != capacity) {
    ::close(fd);
    return make_error(Errc::base_mismatch, "arena header disagrees with requested mapping");
  }

  void * p = ::mmap(
    reinterpret_cast<void *>(base), capacity, PROT_READ,
    MAP_SHARED | MAP_FIXED_NOREPLACE, fd, 0);
  int map_errno = errno;
  ::close(fd);
  if (p == MAP_FAILED) {
    if (map_errno == EEXIST) {
      return make_error(Errc::range_occupied, "requested range already mapped");
    }
    return make_error(Errc::io_error, std::string("mmap: ") + strerror(map_errno));
  }
  if (reinterpret_cast<uint64_t>(p) != base) {
    ::munmap(p, capacity);
    return make_error(Errc::range_occupied, "kernel relocated the mapping");
  }

  ArenaView view;
  view.desc_ = ArenaDescriptor{name, base, capacity, 0};
  return view;
}

ArenaView::~ArenaView()
{
  if (desc_.base != 0) {
    ::munmap(reinterpret_cast<void *>(desc_.base), desc_.capacity);
  }
}

ArenaView::ArenaView(ArenaView && other) noexcept
: desc_(std::move(other.desc_))
{
  other.desc_ = ArenaDescriptor{};
}

ArenaView & ArenaView::operator=(ArenaView && other) noexcept
{
  if (this != &other) {
    if (desc_.base != 0) {
      ::munmap(reinterpret_cast<void *>(desc_.base), desc_.capacity);
    }
    desc_ = std::move(other.desc_);
    other.desc_ = ArenaDescriptor{};
  }
  return *this;
}

Result<uint64_t> Arena::alloc(uint64_t size, uint64_t align)
{
  std::lock_guard<std::mutex> lock(mutex_);
  return alloc_locked(size, align);
}

Result<uint64_t> Arena::alloc_locked(uint64_t size, uint64_t align)
{
  if (size == 0) {
    return make_error(Errc::invalid_argument, "zero-size allocation");
  }
  if (!is_pow2(align)) {
    return make_error(Errc::invalid_argument, "alignment must be a power of two");
  }
  align = std::max(align, kAlignMin);
  const uint64_t need = std::max(align_up(size, kAlignMin) + kBlockHeader, kMinBlock);

  auto * ctl = control();
  uint64_t prev = 0;
  uint64_t cur = ctl->free_head;
  while (cur != 0) {
    auto * node = reinterpret_cast<FreeNode *>(cur);
    const uint64_t node_size = node->size;
    const uint64_t node_next = node->next;

    uint64_t payload = align_up(cur + kBlockHeader, align);
    uint64_t lead = payload - kBlockHeader - cur;
    if (lead != 0 && lead < kMinBlock) {
      // A sliver smaller than a block cannot remain free; push the payload
      // far enough that the leading remainder is itself a valid block.
      payload = align_up(cur + kBlockHeader + kMinBlock, align);
      lead = payload - kBlockHeader - cur;
    }
    const uint64_t block_start = payload - kBlockHeader;
    uint64_t block_size = need;
    uint64_t end = block_start + block_size;

    if (end <= cur + node_size) {
      uint64_t tail = cur + node_size - end;
      if (tail != 0 && tail < kMinBlock) {
        block_size += tail;  // absorb the sliver as slack
        end += tail;
        tail = 0;
      }

      // Splice: replace this node by up to two remainders, preserving order.
      uint64_t link_after = node_next;
      if (tail > 0) {
        auto * t = reinterpret_cast<FreeNode *>(end);
        t->size = tail;
        t->next = link_after;
        link_after = end;
      }
      if (lead > 0) {
        auto * l = reinterpret_cast<FreeNode *>(cur);
        l->size = lead;
        l->next = link_after;
        link_after = cur;
      }
      if (prev == 0) {
        ctl->free_head = link_after;
      } else {
        reinterpret_cast<FreeNode *>(prev)->next = link_after;
      }

      auto * hdr = reinterpret_cast<AllocatedHeader *>(block_start);
      hdr->size = block_size;
      hdr->magic = kAllocMagic;
      hdr->reserved = 0;
      ctl->free_bytes -= block_size;
      ctl->allocated_bytes += block_size;
      ctl->allocated_blocks += 1;
      return payload;
    }

    prev = cur;
    cur = node_next;
  }
  return make_error(Errc::out_of_arena_memory, "no free block large enough");
}

Status Arena::dealloc(uint64_t address)
{
  std::lock_guard<std::mutex> lock(mutex_);
  return dealloc_locked(address);
}

Status Arena::dealloc_locked(uint64_t address)
{
  if (address % kAlignMin != 0 || address < heap_start() + kBlockHeader ||
    address >= desc_.base + desc_.capacity)
  {
    return make_error(Errc::unknown_address, "address not from this arena");
  }
  const uint64_t block = address - kBlockHeader;
  // A block already on the free list is a double free, not an unknown one.
  for (uint64_t n = control()->free_head; n != 0; n = reinterpret_cast<FreeNode *>(n)->next) {
    if (n == block) {
      return make_error(Errc::double_free, "block is already free");
    }
  }
  auto * hdr = reinterpret_cast<AllocatedHeader *>(block);
  if (hdr->magic != kAllocMagic || block + hdr->size > desc_.base + desc_.capacity) {
    return make_error(Errc::unknown_address, "no allocated block at address");
  }

  const uint64_t size = hdr->size;
  if (options_.poison_on_free) {
    std::memset(reinterpret_cast<void *>(address), kPoisonByte, size - kBlockHeader);
  }
  hdr->magic = 0;

  auto * ctl = control();
  ctl->free_bytes += size;
  ctl->allocated_bytes -= size;
  ctl->allocated_blocks -= 1;
  insert_free_block(block, size);
  return Status{};
}

// Inserts into the address-ordered free list and coalesces both neighbors.
void Arena::insert_free_block(uint64_t address, uint64_t size)
{
  auto * ctl = control();
  uint64_t prev = 0;
  uint64_t cur = ctl->free_head;
  while (cur != 0 && cur < address) {
    prev = cur;
    cur = reinterpret_cast<FreeNode *>(cur)->next;
  }

  auto * node = reinterpret_cast<FreeNode *>(address);
  node->size = size;
  node->next = cur;
  if (prev == 0) {
    ctl->free_head = address;
  } else {
    reinterpret_cast<FreeNode *>(prev)->next = address;
  }

  if (cur != 0 && address + node->size == cur) {
    auto * n = reinterpret_cast<FreeNode *>(cur);
    node->size += n->size;
    node->next = n->next;
  }
  if (prev != 0) {
    auto * p = reinterpret_cast<FreeNode *>(prev);
    if (prev + p->size == address) {
      p->size += node->size;
      p->next = node->next;
    }
  }
}

Result<uint64_t> Arena::realloc(uint64_t address, uint64_t new_size)
{
  std::lock_guard<std::mutex> lock(mutex_);
  if (new_size == 0) {
    return make_error(Errc::invalid_argument, "zero-size realloc");
  }

  if (address % kAlignMin != 0 || address < heap_start() + kBlockHeader ||
    address >= desc_.base + desc_.capacity)
  {
    return make_error(Errc::unknown_address, "address not from this arena");
  }
  const uint64_t block = address - kBlockHeader;
  auto * hdr = reinterpret_cast<AllocatedHeader *>(block);
  if (hdr->magic != kAllocMagic) {
    return make_error(Errc::unknown_address, "no allocated block at address");
  }

  auto * ctl = control();
  const uint64_t old_size = hdr->size;
  const uint64_t need = std::max(align_up(new_size, kAlignMin) + kBlockHeader, kMinBlock);

  if (need <= old_size) {
    const uint64_t tail = old_size - need;
    if (tail >= kMinBlock) {
      hdr->size = need;
      ctl->allocated_bytes -= tail;
      ctl->free_bytes += tail;
      insert_free_block(block + need, tail);
    }
    return address;
  }

  // Grow in place when the next block is free and large enough.
  uint64_t prev = 0;
  uint64_t cur = ctl->free_head;
  while (cur != 0 && cur < block + old_size) {
    prev = cur;
    cur = reinterpret_cast<FreeNode *>(cur)->next;
  }
  if (cur == block + old_size) {
    auto * next_free = reinterpret_cast<FreeNode *>(cur);
    const uint64_t neighbor = next_free->size;
    const uint64_t combined = old_size + neighbor;
    if (combined >= need) {
      const uint64_t after = next_free->next;
      uint64_t tail = combined - need;
      uint64_t new_block_size = need;
      if (tail != 0 && tail < kMinBlock) {
        new_block_size = combined;
        tail = 0;
      }
      if (prev == 0) {
        ctl->free_head = after;
      } else {
        reinterpret_cast<FreeNode *>(prev)->next = after;
      }
      hdr->size = new_block_size;
      ctl->free_bytes -= neighbor;
      ctl->allocated_bytes += new_block_size - old_size;
      if (tail > 0) {
        insert_free_block(block + new_block_size, tail);
        ctl->free_bytes += tail;
      }
      return address;
    }
  }

  // Move: allocate fresh, copy the payload prefix, release the old block.
  auto dst = alloc_locked(new_size, kAlignMin);
  if (!dst) {
    return dst.status();  // original block untouched
  }
  const uint64_t copy = std::min(old_size - kBlockHeader, new_size);
  std::memmove(
    reinterpret_cast<void *>(*dst), reinterpret_cast<const void *>(address), copy);
  Status freed = dealloc_locked(address);
  if (!freed.ok()) {
    ZC_LOG_ERROR("realloc: dealloc of source failed: %s", freed.to_string().c_str());
  }
  return *dst;
}

ArenaStats Arena::stats() const
{
  std::lock_guard<std::mutex> lock(mutex_);
  const auto * ctl = control();
  return ArenaStats{
    desc_.capacity, kMetadataBytes, ctl->free_bytes, ctl->allocated_bytes,
    ctl->allocated_blocks};
}

std::vector<BlockInfo> Arena::blocks() const
{
  std::lock_guard<std::mutex> lock(mutex_);
  std::set<uint64_t> free_addrs;
  for (uint64_t n = control()->free_head; n != 0; n = reinterpret_cast<FreeNode *>(n)->next) {
    free_addrs.insert(n);
  }
  std::vector<BlockInfo> out;
  uint64_t at = heap_start();
  const uint64_t end = desc_.base + desc_.capacity;
  while (at < end) {
    uint64_t size;
    bool is_free = free_addrs.count(at) > 0;
    if (is_free) {
      size = reinterpret_cast<const FreeNode *>(at)->size;
    } else {
      size = reinterpret_cast<const AllocatedHeader *>(at)->size;
    }
    if (size < kMinBlock || at + size > end) {
      break;  // corrupt; let check_consistency report it
    }
    out.push_back(BlockInfo{at + kBlockHeader, size, is_free});
    at += size;
  }
  return out;
}

Status Arena::check_consistency() const
{
  std::lock_guard<std::mutex> lock(mutex_);
  const auto * ctl = control();

  uint64_t free_sum = 0;
  uint64_t prev = 0;
  for (uint64_t n = ctl->free_head; n != 0; n = reinterpret_cast<const FreeNode *>(n)->next) {
    const auto * node = reinterpret_cast<const FreeNode *>(n);
    if (n <= prev) {
      return make_error(Errc::protocol_error, "free list not in address order");
    }
    if (prev != 0) {
      const auto * p = reinterpret_cast<const FreeNode *>(prev);
      if (prev + p->size == n) {
        return make_error(Errc::protocol_error, "adjacent free blocks not coalesced");
      }
    }
    if (n < heap_start() || n + node->size > desc_.base + desc_.capacity) {
      return make_error(Errc::protocol_error, "free block escapes the arena");
    }
    free_sum += node->size;
    prev = n;
  }
  if (free_sum != ctl->free_bytes) {
    return make_error(Errc::protocol_error, "free byte counter drifted");
  }
  if (ctl->free_bytes + ctl->allocated_bytes + kMetadataBytes != desc_.capacity) {
    return make_error(Errc::protocol_error, "byte conservation violated");
  }

  // The heap walk must also tile the whole range exactly.
  uint64_t walked = 0;
  uint64_t nblocks_alloc = 0;
  std::set<uint64_t> free_addrs;
  for (uint64_t n = ctl->free_head; n != 0; n = reinterpret_cast<const FreeNode *>(n)->next) {
    free_addrs.insert(n);
  }
  uint64_t at = heap_start();
  const uint64_t end = desc_.base + desc_.capacity;
  while (at < end) {
    uint64_t size;
    if (free_addrs.count(at) > 0) {
      size = reinterpret_cast<const FreeNode *>(at)->size;
    } else {
      const auto * hdr = reinterpret_cast<const AllocatedHeader *>(at);
      if (hdr->magic != kAllocMagic) {
        return make_error(Errc::protocol_error, "heap walk hit a corrupt header");
      }
      size = hdr->size;
      ++nblocks_alloc;
    }
    if (size < kMinBlock || size % kAlignMin != 0 || at + size > end) {
      return make_error(Errc::protocol_error, "heap walk hit an invalid block size");
    }
    walked += size;
    at += size;
  }
  if (walked != desc_.capacity - kMetadataBytes) {
    return make_error(Errc::protocol_error, "heap walk does not tile the arena");
  }
  if (nblocks_alloc != ctl->allocated_blocks) {
    return make_error(Errc::protocol_error, "allocated block counter drifted");
  }
  return Status{};
}

}  // namespace zerocast
