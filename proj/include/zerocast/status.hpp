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

#ifndef ZEROCAST__STATUS_HPP_
#define ZEROCAST__STATUS_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <variant>

namespace zerocast
{

enum class Errc : uint16_t
{
  ok = 0,
  name_collision = 1,
  range_occupied = 2,
  base_mismatch = 3,
  object_missing = 4,
  out_of_arena_memory = 5,
  unknown_address = 6,
  double_free = 7,
  queue_full = 8,
  address_out_of_arena = 9,
  not_holder = 10,
  unknown_entry = 11,
  limit_exceeded = 12,
  payload_too_large = 13,
  arena_conflict = 14,
  connection_lost = 15,
  protocol_error = 16,
  io_error = 17,
  timeout = 18,
  invalid_argument = 19,
  permission_denied = 20,
};

const char * errc_name(Errc c);

/// Error status: a code plus free-form detail. A default Status is ok.
class Status
{
public:
  Status() = default;
  Status(Errc code, std::string detail)
  : code_(code), detail_(std::move(detail)) {}

  bool ok() const {return code_ == Errc::ok;}
  Errc code() const {return code_;}
  const std::string & detail() const {return detail_;}

  std::string to_string() const
  {
    std::string s = errc_name(code_);
    if (!detail_.empty()) {
      s += ": ";
      s += detail_;
    }
    return s;
  }

private:
  Errc code_{Errc::ok};
  std::string detail_;
};

inline Status make_error(Errc code, std::string detail = "")
{
  return Status{code, std::move(detail)};
}

/// Minimal expected-like carrier: either a value or an error Status.
template<typename T>
class Result
{
public:
  Result(T value)  // NOLINT(runtime/explicit): ergonomic returns
  : var_(std::move(value)) {}
  Result(Status status)  // NOLINT(runtime/explicit)
  : var_(std::move(status)) {}

  bool has_value() const {return std::holds_alternative<T>(var_);}
  explicit operator bool() const {return has_value();}

  T & value() {return std::get<T>(var_);}
  const T & value() const {return std::get<T>(var_);}
  T & operator*() {return value();}
  const T & operator*() const {return value();}
  T * operator->() {return &value();}
  const T * operator->() const {return &value();}

  const Status & status() const
  {
    static const Status kOk{};
    return has_value() ? kOk : std::get<Status>(var_);
  }

private:
  std::variant<T, Status> var_;
};

}  // namespace zerocast

#endif  // ZEROCAST__STATUS_HPP_
