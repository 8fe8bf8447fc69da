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

#include "zerocast/bench/runner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <set>
#include <sstream>
#include <thread>

#include "zerocast/bench/load.hpp"
#include "zerocast/broker_daemon.hpp"
#include "zerocast/log.hpp"

namespace zerocast
{
namespace bench
{

namespace
{

/// A supervised worker process with line-based stdio pipes.
class Child
{
public:
  Child() = default;
  Child(const Child &) = delete;
  Child & operator=(const Child &) = delete;

  ~Child()
  {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
    close_fds();
  }

  Status spawn(const std::string & exe, const std::vector<std::string> & args)
  {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      return Status(Errc::io_error, std::string("pipe: ") + strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      return Status(Errc::io_error, std::string("fork: ") + strerror(errno));
    }
    if (pid == 0) {
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
    pid_ = pid;
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    return Status{};
  }

  /// Next stdout line within `timeout_ms`, or an error on timeout/EOF.
  Result<std::string> read_line(int timeout_ms)
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
        return Status(Errc::timeout, "no line from worker pid " + std::to_string(pid_));
      }
      pollfd pfd{out_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (rc <= 0) {
        if (rc < 0 && errno == EINTR) {
          continue;
        }
        return Status(Errc::timeout, "no line from worker pid " + std::to_string(pid_));
      }
      char chunk[4096];
      const ssize_t n = ::read(out_fd_, chunk, sizeof(chunk));
      if (n <= 0) {
        return Status(Errc::connection_lost, "worker pid " + std::to_string(pid_) + " closed");
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

  /// Reads until a line equal to `want` appears; other lines go to `extra`.
  Status expect_line(
    const std::string & want, int timeout_ms, std::vector<std::string> * extra = nullptr)
  {
    const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
      auto line = read_line(std::max<int>(1, static_cast<int>(remaining.count())));
      if (!line.has_value()) {
        return line.status();
      }
      if (*line == want) {
        return Status{};
      }
      if (extra != nullptr) {
        extra->push_back(*line);
      }
    }
  }

  void write_line(const std::string & line)
  {
    const std::string framed = line + "\n";
    (void)!::write(in_fd_, framed.data(), framed.size());
  }

  /// Exit code, or -1 if the worker had to be killed after `timeout_ms`.
  int join(int timeout_ms)
  {
    if (pid_ <= 0) {
      return -1;
    }
    const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    int status = 0;
    for (;;) {
      const pid_t got = ::waitpid(pid_, &status, WNOHANG);
      if (got == pid_) {
        pid_ = -1;
        close_fds();
        return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
      }
      if (std::chrono::steady_clock::now() >= deadline) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
        close_fds();
        return -1;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
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

/// The broker serving one campaign: the configured one, or a private daemon
/// on a unique socket.
class BrokerHost
{
public:
  explicit BrokerHost(const std::string & configured)
  {
    if (!configured.empty()) {
      path_ = configured;
      return;
    }
    static int counter = 0;
    broker::DaemonOptions options;
    options.socket_path =
      "/tmp/zc-bench." + std::to_string(getpid()) + "." + std::to_string(counter++);
    // Deep queues: a subscriber stalled by generated load must cost samples,
    // not wedge the publisher's schedule.
    options.core.queue_capacity = 256;
    daemon_ = std::make_unique<broker::BrokerDaemon>(options);
    status_ = daemon_->start();
    if (status_.ok()) {
      path_ = daemon_->socket_path();
      thread_ = std::thread([this] {daemon_->run();});
    }
  }

  ~BrokerHost()
  {
    if (daemon_ && thread_.joinable()) {
      daemon_->stop();
      thread_.join();
    }
  }

  const Status & status() const {return status_;}
  const std::string & path() const {return path_;}

private:
  Status status_;
  std::string path_;
  std::unique_ptr<broker::BrokerDaemon> daemon_;
  std::thread thread_;
};

std::string self_executable()
{
  char buf[4096];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) {
    return "";
  }
  buf[n] = '\0';
  return buf;
}

struct CellPlan
{
  std::string label;       // CSV transport column
  std::string pub_kind;    // zc | baseline
  std::string sub_kind;    // zc | baseline
  std::string bridge_dir;  // empty: no bridge process
};

Result<CellPlan> plan_for(const std::string & transport)
{
  if (transport == kTransportZerocopy) {
    return CellPlan{transport, "zc", "zc", ""};
  }
  if (transport == kTransportBaselineLabel) {
    return CellPlan{transport, "baseline", "baseline", ""};
  }
  if (transport == kTransportBridgeZcToBaseline) {
    return CellPlan{transport, "zc", "baseline", "zc-to-baseline"};
  }
  if (transport == kTransportBridgeBaselineToZc) {
    return CellPlan{transport, "baseline", "zc", "baseline-to-zc"};
  }
  return Status(Errc::invalid_argument, "unknown transport: " + transport);
}

/// Runs one (transport, size, load) measurement cell: subscriber first, then
/// bridge (if any), then publisher; GO; collect; tear down in reverse.
Status run_cell(
  const std::string & helper, const std::string & broker_path, const CellPlan & plan,
  uint64_t size, uint32_t load_pct, const ExperimentConfig & config, Dataset & dataset)
{
  const std::string topic = "/bench/" + plan.label + "/" + std::to_string(size) + "/" +
    std::to_string(load_pct);
  const std::string count = std::to_string(config.count);
  const std::string period_us = std::to_string(
    std::chrono::duration_cast<std::chrono::microseconds>(config.period).count());
  const CellKey key{plan.label, size, load_pct};

  auto incomplete = [&](const std::string & why) {
      ZC_LOG_WARN("cell %s/%llu/%u%% incomplete: %s", plan.label.c_str(),
        static_cast<unsigned long long>(size), load_pct, why.c_str());
      dataset.incomplete.push_back(key);
      dataset.notes.push_back(
        "incomplete " + plan.label + "/" + std::to_string(size) + "/" +
        std::to_string(load_pct) + ": " + why);
      return Status{};  // an aborted cell is recorded, not fatal
    };

  Child sub;
  Status st = sub.spawn(
    helper, {"_sub", broker_path, topic, plan.sub_kind, count, period_us,
      config.realtime_subscribers ? "1" : "0"});
  if (!st.ok()) {
    return st;
  }
  if (!sub.expect_line("READY", 10000).ok()) {
    return incomplete("subscriber failed to start");
  }

  Child bridge;
  if (!plan.bridge_dir.empty()) {
    st = bridge.spawn(helper, {"_bridge", broker_path, topic, plan.bridge_dir});
    if (!st.ok()) {
      return st;
    }
    if (!bridge.expect_line("READY", 10000).ok()) {
      return incomplete("bridge failed to start");
    }
  }

  Child pub;
  st = pub.spawn(
    helper, {"_pub", broker_path, topic, plan.pub_kind, std::to_string(size), count, period_us});
  if (!st.ok()) {
    return st;
  }
  if (!pub.expect_line("READY", 10000).ok()) {
    return incomplete("publisher failed to start");
  }

  pub.write_line("GO");
  const int publish_budget_ms = static_cast<int>(
    config.period.count() * (config.count + 10) + 5000);
  std::vector<std::string> drops;
  if (!pub.expect_line("DONE", publish_budget_ms, &drops).ok()) {
    return incomplete("publisher stalled");
  }

  sub.write_line("DONE");
  const int drain_budget_ms = static_cast<int>(config.period.count() * 10 + 5000);
  std::vector<Sample> rows;
  std::string footer;
  for (;;) {
    auto line = sub.read_line(drain_budget_ms);
    if (!line.has_value()) {
      return incomplete("subscriber produced no result: " + line.status().to_string());
    }
    if (line->rfind("SAMPLE ", 0) == 0) {
      std::istringstream fields(line->substr(7));
      Sample sample;
      sample.transport = plan.label;
      sample.size_bytes = size;
      sample.load_pct = load_pct;
      if (!(fields >> sample.seq >> sample.latency_ns)) {
        return incomplete("malformed sample line");
      }
      if (sample.seq >= config.warmup) {
        rows.push_back(std::move(sample));
      }
      continue;
    }
    footer = *line;
    break;
  }

  pub.write_line("EXIT");
  if (!plan.bridge_dir.empty()) {
    bridge.write_line("EXIT");
    bridge.join(2000);
  }
  pub.join(2000);
  sub.join(2000);

  if (footer.rfind("TIMEOUT", 0) == 0) {
    return incomplete("delivery gap exceeded 10x period (" + footer + ")");
  }
  if (footer.rfind("END ", 0) != 0) {
    return incomplete("unexpected subscriber footer: " + footer);
  }
  if (footer.find("prio=default") != std::string::npos) {
    const std::string note = "prio=default";
    if (std::find(dataset.notes.begin(), dataset.notes.end(), note) == dataset.notes.end()) {
      dataset.notes.push_back(note);
    }
  }
  if (!drops.empty()) {
    dataset.notes.push_back(
      plan.label + "/" + std::to_string(size) + "/" + std::to_string(load_pct) + ": " +
      std::to_string(drops.size()) + " publishes dropped");
  }

  std::sort(
    rows.begin(), rows.end(), [](const Sample & a, const Sample & b) {return a.seq < b.seq;});
  dataset.samples.insert(
    dataset.samples.end(), std::make_move_iterator(rows.begin()),
    std::make_move_iterator(rows.end()));
  return Status{};
}

Result<std::string> resolve_helper(const ExperimentConfig & config)
{
  std::string helper = config.helper.empty() ? self_executable() : config.helper;
  if (helper.empty() || ::access(helper.c_str(), X_OK) != 0) {
    return Status(Errc::invalid_argument, "worker helper not executable: " + helper);
  }
  return helper;
}

}  // namespace

Status ExperimentConfig::validate() const
{
  if (sizes.empty() || transports.empty()) {
    return Status(Errc::invalid_argument, "sizes and transports must be nonempty");
  }
  if (count <= warmup) {
    return Status(Errc::invalid_argument, "count must exceed the warmup exclusion");
  }
  if (period.count() <= 0) {
    return Status(Errc::invalid_argument, "period must be positive");
  }
  return Status{};
}

Result<Dataset> run_latency_suite(const ExperimentConfig & config)
{
  Status valid = config.validate();
  if (!valid.ok()) {
    return valid;
  }
  auto helper = resolve_helper(config);
  if (!helper.has_value()) {
    return helper.status();
  }
  BrokerHost broker(config.broker_path);
  if (!broker.status().ok()) {
    return broker.status();
  }

  Dataset dataset;
  for (const std::string & transport : config.transports) {
    auto plan = plan_for(transport);
    if (!plan.has_value()) {
      return plan.status();
    }
    for (uint64_t size : config.sizes) {
      Status st = run_cell(*helper, broker.path(), *plan, size, 0, config, dataset);
      if (!st.ok()) {
        return st;
      }
    }
  }
  return dataset;
}

Result<Dataset> run_load_suite(const ExperimentConfig & config)
{
  Status valid = config.validate();
  if (!valid.ok()) {
    return valid;
  }
  auto helper = resolve_helper(config);
  if (!helper.has_value()) {
    return helper.status();
  }
  BrokerHost broker(config.broker_path);
  if (!broker.status().ok()) {
    return broker.status();
  }

  // The stability experiment fixes the message size (first configured size)
  // and sweeps generated load instead.
  const uint64_t size = config.sizes.front();
  ExperimentConfig cell_config = config;
  cell_config.realtime_subscribers = true;

  Dataset dataset;
  for (const std::string & transport : config.transports) {
    auto plan = plan_for(transport);
    if (!plan.has_value()) {
      return plan.status();
    }
    for (uint32_t load_pct : config.loads) {
      LoadGenerator generator;
      generator.start(load_pct);
      Status st = run_cell(*helper, broker.path(), *plan, size, load_pct, cell_config, dataset);
      generator.stop();
      if (!st.ok()) {
        return st;
      }
    }
  }
  return dataset;
}

Result<Dataset> run_bridge_suite(const ExperimentConfig & config)
{
  Status valid = config.validate();
  if (!valid.ok()) {
    return valid;
  }
  auto helper = resolve_helper(config);
  if (!helper.has_value()) {
    return helper.status();
  }
  BrokerHost broker(config.broker_path);
  if (!broker.status().ok()) {
    return broker.status();
  }

  Dataset dataset;
  const std::vector<std::string> routes = {
    kTransportBaselineLabel, kTransportBridgeZcToBaseline, kTransportBridgeBaselineToZc};
  for (const std::string & transport : routes) {
    auto plan = plan_for(transport);
    if (!plan.has_value()) {
      return plan.status();
    }
    for (uint64_t size : config.sizes) {
      Status st = run_cell(*helper, broker.path(), *plan, size, 0, config, dataset);
      if (!st.ok()) {
        return st;
      }
    }
  }
  return dataset;
}

}  // namespace bench
}  // namespace zerocast
