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

#ifndef TESTS_SUPPORT_CHILD_PROCESS_HPP_
#define TESTS_SUPPORT_CHILD_PROCESS_HPP_

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

namespace zerocast::test
{

/// How a supervised child ended.
struct ExitStatus
{
  bool timed_out{false};  // had to be SIGKILLed by join()
  bool signaled{false};
  int value{0};  // exit code, or the terminating signal when `signaled`
};

/// A worker process wired up for the line protocols the tests speak:
/// stdin/stdout piped line-wise, stderr inherited, SIGKILL-on-destruction.
class ChildProcess
{
public:
  ChildProcess() = default;
  ChildProcess(const ChildProcess &) = delete;
  ChildProcess & operator=(const ChildProcess &) = delete;

  ~ChildProcess()
  {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
    close_fds();
  }

  bool spawn(const std::string & exe, const std::vector<std::string> & args)
  {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      return false;
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      return false;
    }
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      std::vector<char *> argv;
      argv.push_back(const_cast<char *>(exe.c_str()));
      for (const std::string & arg : args) {
        argv.push_back(const_cast<char *>(arg.c_str()));
      }
      argv.push_back(nullptr);
      ::execv(exe.c_str(), argv.data());
      std::fprintf(stderr, "execv %s: %s\n", exe.c_str(), strerror(errno));
      _exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    return true;
  }

  pid_t pid() const {return pid_;}

  void kill(int sig) const
  {
    if (pid_ > 0) {
      ::kill(pid_, sig);
    }
  }

  /// Next stdout line, or empty on timeout/EOF.
  std::string read_line(int timeout_ms)
  {
    const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
      const size_t newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        std::string line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        return line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        return "";
      }
      pollfd pfd{out_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (rc <= 0) {
        if (rc < 0 && errno == EINTR) {
          continue;
        }
        return "";
      }
      char chunk[4096];
      const ssize_t n = ::read(out_fd_, chunk, sizeof(chunk));
      if (n <= 0) {
        return "";
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

  /// Reads until `want`; other lines are collected into `extra` if given.
  bool expect_line(
    const std::string & want, int timeout_ms, std::vector<std::string> * extra = nullptr)
  {
    const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        return false;
      }
      const std::string line = read_line(static_cast<int>(remaining.count()));
      if (line.empty()) {
        return false;
      }
      if (line == want) {
        return true;
      }
      if (extra != nullptr) {
        extra->push_back(line);
      }
    }
  }

  void write_line(const std::string & line) const
  {
    const std::string framed = line + "\n";
    (void)!::write(in_fd_, framed.data(), framed.size());
  }

  /// Reaps the child; `timed_out` means it had to be killed first.
  ExitStatus join(int timeout_ms)
  {
    ExitStatus result;
    if (pid_ <= 0) {
      return result;
    }
    const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    int status = 0;
    for (;;) {
      const pid_t got = ::waitpid(pid_, &status, WNOHANG);
      if (got == pid_) {
        break;
      }
      if (std::chrono::steady_clock::now() >= deadline) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        result.timed_out = true;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    pid_ = -1;
    close_fds();
    if (WIFSIGNALED(status)) {
      result.signaled = true;
      result.value = WTERMSIG(status);
    } else if (WIFEXITED(status)) {
      result.value = WEXITSTATUS(status);
    }
    return result;
  }

private:
  void close_fds()
  {
    if (in_fd_ >= 0) {
      ::close(in_fd_);
      in_fd_ = -1;
    }
    if (out_fd_ >= 0) {
      ::close(out_fd_);
      out_fd_ = -1;
    }
  }

  pid_t pid_{-1};
  int in_fd_{-1};
  int out_fd_{-1};
  std::string buffer_;
};

/// Directory holding the currently running binary, for locating siblings.
inline std::string executable_dir()
{
  char buf[4096];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) {
    return ".";
  }
  buf[n] = '\0';
  std::string path(buf);
  const size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? "." : path.substr(0, slash);
}

/// Absolute path of the currently running binary.
inline std::string executable_path()
{
  char buf[4096];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) {
    return "";
  }
  buf[n] = '\0';
  return buf;
}

}  // namespace zerocast::test

#endif  // TESTS_SUPPORT_CHILD_PROCESS_HPP_
