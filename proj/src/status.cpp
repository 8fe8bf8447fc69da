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

#include "zerocast/status.hpp"

namespace zerocast
{

const char * errc_name(Errc c)
{
  switch (c) {
    case Errc::ok: return "ok";
    case Errc::name_collision: return "name-collision";
    case Errc::range_occupied: return "range-occupied";
    case Errc::base_mismatch: return "base-mismatch";
    case Errc::object_missing: return "object-missing";
    case Errc::out_of_arena_memory: return "out-of-arena-memory";
    case Errc::unknown_address: return "unknown-address";
    case Errc::double_free: return "double-free";
    case Errc::queue_full: return "queue-full";
    case Errc::address_out_of_arena: return "address-out-of-arena";
    case Errc::not_holder: return "not-holder";
    case Errc::unknown_entry: return "unknown-entry";
    case Errc::limit_exceeded: return "limit-exceeded";
    case Errc::payload_too_large: return "payload-too-large";
    case Errc::arena_conflict: return "arena-conflict";
    case Errc::connection_lost: return "connection-lost";
    case Errc::protocol_error: return "protocol-error";
    case Errc::io_error: return "io-error";
    case Errc::timeout: return "timeout";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::permission_denied: return "permission-denied";
  }
  return "unknown";
}

}  // namespace zerocast
