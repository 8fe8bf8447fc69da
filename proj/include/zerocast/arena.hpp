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

#ifndef ZEROCAST__ARENA_HPP_
#define ZEROCAST__ARENA_HPP_

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "zerocast/status.hpp"

namespace zerocast
{

/// Identity of one process's message arena: a named shared-memory object
/// mapped read-write at a fixed virtual base in its owner and read-only at
/// the same base in every attached process. Identical bases are what keep
/// pointers inside messages valid across processes.
struct ArenaDescriptor
{
  std::string name;      // shared-memory object name, e.g. "zerocast.1234"
  uint64_t base{0};      // page-aligned virtual base
  uint64_t capacity{0};  // bytes, multiple of the page size
  uint64_t owner_pid{0};
};

/// Conventional object name for a process's arena.
std::string default_arena_name(uint64_t pid);

constexpr uint64_t kMinArenaCapacity = 1ull << 20;
constexpr uint64_t kDefaultArenaCapacity = 64ull << 20;

struct ArenaStats
{
  uint64_t capacity{0};
  uint64_t metadata_bytes{0};
  uint64_t free_bytes{0};
  uint64_t allocated_bytes{0};  // includes per-block headers and slack
  uint64_t allocated_blocks{0};
};

/// One live block as seen by the allocator, for oracle comparison in tests.
struct BlockInfo
{
  uint64_t address{0};  // payload address handed to the caller
  uint64_t size{0};     // full block size including header and slack
  bool free{false};
};

/// Read-only mapping of another process's arena at the owner's base address.
///
/// Hardware protection forbids writes: a store through the view faults.
class ArenaView
{
public:
  /// Maps the named object read-only at exactly `base`. The requested base
  /// must equal the base recorded in the arena header, which is verified
  /// against a temporary floating mapping before anything is placed at the
  /// fixed address.
  static Result<ArenaView> attach(
    const std::string & name, uint64_t base, uint64_t capacity);

  ~ArenaView();
  ArenaView(const ArenaView &) = delete;
  ArenaView & operator=(const ArenaView &) = delete;
  ArenaView(ArenaView && other) noexcept;
  ArenaView & operator=(ArenaView && other) noexcept;

  const ArenaDescriptor & descriptor() const {return desc_;}
  bool contains(uint64_t address) const
  {
    return address >= desc_.base && address < desc_.base + desc_.capacity;
  }
  const void * at(uint64_t address) const
  {
    return reinterpret_cast<const void *>(address);
  }

private:
  ArenaView() = default;
  ArenaDescriptor desc_;
};

/// The owner-side arena: creates the shared-memory object, maps it
/// read-write at a fixed base, and serves all message allocations from it.
///
/// Allocation policy is first-fit over an address-ordered free list with
/// immediate coalescing. Physical pages are committed lazily by the OS, so
/// a large capacity costs only virtual address space until written.
///
/// Allocator calls are serialized by an internal lock. Bytes of published
/// messages are never mutated afterwards, so readers need no coordination.
class Arena
{
public:
  struct Options
  {
    /// Fill freed payload bytes with 0xDD to surface use-after-reclaim.
    /// Defaults to on in debug builds.
#ifdef NDEBUG
    bool poison_on_free{false};
#else
    bool poison_on_free{true};
#endif
    /// Unlink the shared-memory object when the Arena is destroyed.
    bool unlink_on_close{true};
  };

  /// Creates the named object sized `capacity` and maps it at exactly
  /// `base`; the mapping succeeds at the requested address or the whole
  /// operation fails (no silent relocation).
  static Result<Arena> create(const std::string & name, uint64_t base, uint64_t capacity);
  static Result<Arena> create(
    const std::string & name, uint64_t base, uint64_t capacity, Options options);

  ~Arena();
  Arena(const Arena &) = delete;
  Arena & operator=(const Arena &) = delete;
  Arena(Arena && other) noexcept;
  Arena & operator=(Arena && other) noexcept;

  const ArenaDescriptor & descriptor() const {return desc_;}

  /// First-fit allocation of `size` bytes aligned to `align` (power of two).
  Result<uint64_t> alloc(uint64_t size, uint64_t align = 16);

  /// Frees a block previously returned by alloc/realloc. Direct double
  /// frees are detected; unknown addresses are rejected.
  Status dealloc(uint64_t address);

  /// Grows or shrinks a live block, preserving the min(old,new) prefix.
  /// Grows in place when the trailing neighbor is free, otherwise moves the
  /// block within the arena. On failure the original block is untouched.
  Result<uint64_t> realloc(uint64_t address, uint64_t new_size);

  bool contains(uint64_t address) const
  {
    return address >= desc_.base && address < desc_.base + desc_.capacity;
  }

  void * at(uint64_t address) {return reinterpret_cast<void *>(address);}
  const void * at(uint64_t address) const
  {
    return reinterpret_cast<const void *>(address);
  }

  ArenaStats stats() const;

  /// Recomputes free/allocated byte totals by walking the heap and checks
  /// free-list ordering, full coalescing, and byte conservation.
  Status check_consistency() const;

  /// Every block in address order; test/debug aid.
  std::vector<BlockInfo> blocks() const;

private:
  Arena() = default;

  void close();

  struct AllocatorControl;
  AllocatorControl * control();
  const AllocatorControl * control() const;

  uint64_t heap_start() const;
  Result<uint64_t> alloc_locked(uint64_t size, uint64_t align);
  Status dealloc_locked(uint64_t address);
  void insert_free_block(uint64_t address, uint64_t size);

  ArenaDescriptor desc_;
  Options options_;
  mutable std::mutex mutex_;
};

}  // namespace zerocast

#endif  // ZEROCAST__ARENA_HPP_
