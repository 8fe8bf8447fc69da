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

#ifndef ZEROCAST__LOG_HPP_
#define ZEROCAST__LOG_HPP_

#include <unistd.h>

#include <cstdarg>
#include <cstdio>

namespace zerocast
{

enum class LogLevel { debug, info, warn, error };

/// Minimum level actually emitted; settable via ZEROCAST_LOG=debug|info|warn|error.
LogLevel log_threshold();
void set_log_threshold(LogLevel level);

namespace detail
{
void vlog(LogLevel level, const char * fmt, va_list ap);
}

// Structured one-line records on stderr: [zerocast][LEVEL][pid=N] key=value ...
inline void log(LogLevel level, const char * fmt, ...)
  __attribute__((format(printf, 2, 3)));

inline void log(LogLevel level, const char * fmt, ...)
{
  if (static_cast<int>(level) < static_cast<int>(log_threshold())) {
    return;
  }
  va_list ap;
  va_start(ap, fmt);
  detail::vlog(level, fmt, ap);
  va_end(ap);
}

#define ZC_LOG_DEBUG(...) ::zerocast::log(::zerocast::LogLevel::debug, __VA_ARGS__)
#define ZC_LOG_INFO(...) ::zerocast::log(::zerocast::LogLevel::info, __VA_ARGS__)
#define ZC_LOG_WARN(...) ::zerocast::log(::zerocast::LogLevel::warn, __VA_ARGS__)
#define ZC_LOG_ERROR(...) ::zerocast::log(::zerocast::LogLevel::error, __VA_ARGS__)

}  // namespace zerocast

#endif  // ZEROCAST__LOG_HPP_
