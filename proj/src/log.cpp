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

#include "zerocast/log.hpp"

#include <cstdlib>
#include <string>

namespace zerocast
{

namespace
{
LogLevel g_threshold = [] {
    const char * env = std::getenv("ZEROCAST_LOG");
    if (env == nullptr) {return LogLevel::info;}
    std::string v{env};
    if (v == "debug") {return LogLevel::debug;}
    if (v == "warn") {return LogLevel::warn;}
    if (v == "error") {return LogLevel::error;}
    return LogLevel::info;
  }();
}  // namespace

LogLevel log_threshold() {return g_threshold;}
void set_log_threshold(LogLevel level) {g_threshold = level;}

namespace detail
{
void vlog(LogLevel level, const char * fmt, va_list ap)
{
  static const char * names[] = {"DEBUG", "INFO", "WARN", "ERROR"};
  char line[1024];
  int off = snprintf(
    line, sizeof(line), "[zerocast][%s][pid=%d] ",
    names[static_cast<int>(level)], getpid());
  if (off < 0) {return;}
  int n = vsnprintf(line + off, sizeof(line) - static_cast<size_t>(off) - 1, fmt, ap);
  if (n < 0) {return;}
  size_t len = static_cast<size_t>(off) + static_cast<size_t>(n);
  if (len >= sizeof(line) - 1) {len = sizeof(line) - 2;}
  line[len++] = '\n';
  // One write per record keeps lines whole across threads/processes.
  (void)!write(STDERR_FILENO, line, len);
}
}  // namespace detail

}  // namespace zerocast
