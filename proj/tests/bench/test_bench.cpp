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

#define DOCTEST_CONFIG_IMPLEMENT
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "zerocast/bench/load.hpp"
#include "zerocast/bench/runner.hpp"
#include "zerocast/bench/stats.hpp"

// The bench coordinator spawns this very binary for its worker roles, so
// worker invocations must be routed before doctest sees the arguments.
int main(int argc, char ** argv)
{
  if (zerocast::bench::is_worker_invocation(argc, argv)) {
    return zerocast::bench::run_worker_role(argc, argv);
  }
  return doctest::Context(argc, argv).run();
}

namespace
{

using namespace zerocast;        // NOLINT(build/namespaces)
using namespace zerocast::bench; // NOLINT(build/namespaces)

std::string unique_csv_path()
{
  static int counter = 0;
  return "/tmp/zc-bench-test." + std::to_string(getpid()) + "." + std::to_string(counter++) +
         ".csv";
}

Sample make_sample(
  const std::string & transport, uint64_t size, uint32_t load, uint64_t seq, uint64_t ns)
{
  Sample s;
  s.transport = transport;
  s.size_bytes = size;
  s.load_pct = load;
  s.seq = seq;
  s.latency_ns = ns;
  return s;
}

}  // namespace

TEST_SUITE("bench")
{
  TEST_CASE("worker invocations are recognized by their underscore prefix")
  {
    char prog[] = "bench";
    char pub[] = "_pub";
    char latency[] = "latency";
    char * worker_argv[] = {prog, pub, nullptr};
    char * cli_argv[] = {prog, latency, nullptr};
    char * bare_argv[] = {prog, nullptr};
    CHECK(is_worker_invocation(2, worker_argv));
    CHECK_FALSE(is_worker_invocation(2, cli_argv));
    CHECK_FALSE(is_worker_invocation(1, bare_argv));
  }

  TEST_CASE("nearest-rank percentiles pick the ceil(p/100*n)-th value")
  {
    std::vector<uint64_t> hundred;
    for (uint64_t v = 1; v <= 100; ++v) {
      hundred.push_back(v);
    }
    CHECK(percentile_nearest_rank(hundred, 50.0) == 50);
    CHECK(percentile_nearest_rank(hundred, 95.0) == 95);
    CHECK(percentile_nearest_rank(hundred, 99.0) == 99);
    CHECK(percentile_nearest_rank(hundred, 100.0) == 100);

    const std::vector<uint64_t> four = {10, 20, 30, 40};
    CHECK(percentile_nearest_rank(four, 50.0) == 20);   // ceil(2.0) = 2nd
    CHECK(percentile_nearest_rank(four, 75.0) == 30);   // ceil(3.0) = 3rd
    CHECK(percentile_nearest_rank(four, 95.0) == 40);   // ceil(3.8) = 4th
    CHECK(percentile_nearest_rank(four, 25.0) == 10);   // ceil(1.0) = 1st
    CHECK(percentile_nearest_rank(four, 1.0) == 10);    // rank clamps to 1

    const std::vector<uint64_t> one = {7};
    CHECK(percentile_nearest_rank(one, 50.0) == 7);
    CHECK(percentile_nearest_rank(one, 99.0) == 7);
  }

  TEST_CASE("population stddev and cv match hand-computed values")
  {
    CHECK(population_stddev({5, 5, 5}, 5.0) == doctest::Approx(0.0));
    CHECK(population_stddev({1, 2, 3}, 2.0) == doctest::Approx(0.8164966).epsilon(1e-6));

    const std::vector<Sample> samples = {
      make_sample("zerocopy", 1024, 0, 0, 100),
      make_sample("zerocopy", 1024, 0, 1, 110),
      make_sample("zerocopy", 1024, 0, 2, 90),
    };
    const auto cells = summarize(samples);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].count == 3);
    CHECK(cells[0].mean == doctest::Approx(100.0));
    CHECK(cells[0].stddev == doctest::Approx(8.1649658).epsilon(1e-6));
    CHECK(cells[0].cv == doctest::Approx(0.0816497).epsilon(1e-5));
    CHECK(cells[0].min == 90);
    CHECK(cells[0].max == 110);
    CHECK(cells[0].p50 == 100);
  }

  TEST_CASE("summarize groups by cell and orders the result")
  {
    std::vector<Sample> samples;
    for (uint64_t seq = 0; seq < 5; ++seq) {
      samples.push_back(make_sample("zerocopy", 4096, 30, seq, 200 + seq));
      samples.push_back(make_sample("baseline", 4096, 30, seq, 900 + seq));
      samples.push_back(make_sample("zerocopy", 1024, 30, seq, 100 + seq));
    }
    const auto cells = summarize(samples);
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].key == CellKey{"baseline", 4096, 30});
    CHECK(cells[1].key == CellKey{"zerocopy", 1024, 30});
    CHECK(cells[2].key == CellKey{"zerocopy", 4096, 30});
    for (const auto & cell : cells) {
      CHECK(cell.count == 5);
      CHECK(cell.max == cell.min + 4);
    }
    const std::string table = format_table(cells);
    CHECK(table.find("transport") != std::string::npos);
    CHECK(table.find("zerocopy") != std::string::npos);
    CHECK(table.find("baseline") != std::string::npos);
    CHECK(table.find("p99") != std::string::npos);
  }

  TEST_CASE("csv writing round-trips through parsing")
  {
    const std::string path = unique_csv_path();
    const std::vector<Sample> samples = {
      make_sample("zerocopy", 1024, 0, 10, 12345),
      make_sample("baseline", 1048576, 90, 11, 987654321),
      make_sample("bridge_zc_to_baseline", 102400, 60, 12, 777),
    };
    REQUIRE(write_csv(path, samples, {"prio=default", "one dropped"}).ok());

    std::ifstream in(path);
    std::string first_line;
    std::getline(in, first_line);
    CHECK(first_line == "transport,size_bytes,load_pct,seq,latency_ns");
    std::string second_line;
    std::getline(in, second_line);
    CHECK(second_line == "# prio=default");
    in.close();

    auto parsed = parse_csv(path);
    REQUIRE(parsed.has_value());
    REQUIRE(parsed->size() == samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
      CHECK((*parsed)[i].transport == samples[i].transport);
      CHECK((*parsed)[i].size_bytes == samples[i].size_bytes);
      CHECK((*parsed)[i].load_pct == samples[i].load_pct);
      CHECK((*parsed)[i].seq == samples[i].seq);
      CHECK((*parsed)[i].latency_ns == samples[i].latency_ns);
    }
    std::remove(path.c_str());
  }

  TEST_CASE("csv parsing skips comments and flags corrupt rows")
  {
    const std::string path = unique_csv_path();
    {
      std::ofstream out(path);
      out << "transport,size_bytes,load_pct,seq,latency_ns\n";
      out << "# a comment\n";
      out << "\n";
      out << "zerocopy,1024,0,0,500\n";
      out << "# another comment\n";
      out << "baseline,2048,30,1,900\n";
    }
    auto parsed = parse_csv(path);
    REQUIRE(parsed.has_value());
    REQUIRE(parsed->size() == 2);
    CHECK((*parsed)[0].latency_ns == 500);
    CHECK((*parsed)[1].transport == "baseline");

    {
      std::ofstream out(path, std::ios::app);
      out << "zerocopy,not-a-number,0,0,1\n";
    }
    auto corrupt = parse_csv(path);
    REQUIRE_FALSE(corrupt.has_value());
    CHECK(corrupt.status().code() == Errc::invalid_argument);

    std::remove(path.c_str());
    auto missing = parse_csv(path);
    REQUIRE_FALSE(missing.has_value());
    CHECK(missing.status().code() == Errc::io_error);
  }

  TEST_CASE("experiment config validation rejects impossible campaigns")
  {
    ExperimentConfig good;
    CHECK(good.validate().ok());

    ExperimentConfig no_sizes;
    no_sizes.sizes.clear();
    CHECK(no_sizes.validate().code() == Errc::invalid_argument);

    ExperimentConfig warmup_eats_all;
    warmup_eats_all.count = 10;
    warmup_eats_all.warmup = 10;
    CHECK(warmup_eats_all.validate().code() == Errc::invalid_argument);

    ExperimentConfig zero_period;
    zero_period.period = std::chrono::milliseconds(0);
    CHECK(zero_period.validate().code() == Errc::invalid_argument);

    ExperimentConfig bad_helper;
    bad_helper.helper = "/nonexistent/worker";
    auto run = run_latency_suite(bad_helper);
    REQUIRE_FALSE(run.has_value());
    CHECK(run.status().code() == Errc::invalid_argument);
  }

  TEST_CASE("cpu accounting reads are monotone and bounded")
  {
    auto first = read_cpu_times();
    REQUIRE(first.has_value());
    CHECK(first->total > 0);
    CHECK(first->busy <= first->total);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    auto second = read_cpu_times();
    REQUIRE(second.has_value());
    CHECK(second->total > first->total);
    CHECK(second->busy >= first->busy);
  }

  TEST_CASE("load generator raises measured cpu utilization")
  {
    auto idle = measure_cpu_utilization(std::chrono::milliseconds(400));
    REQUIRE(idle.has_value());
    CHECK(*idle >= 0.0);
    CHECK(*idle <= 100.0);

    LoadGenerator generator;
    CHECK_FALSE(generator.running());
    generator.start(60);
    CHECK(generator.running());
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    auto loaded = measure_cpu_utilization(std::chrono::milliseconds(400));
    generator.stop();
    CHECK_FALSE(generator.running());

    REQUIRE(loaded.has_value());
    CHECK(*loaded <= 100.0);
    // A 60% duty cycle must move measured utilization well past idle noise.
    CHECK(*loaded > *idle);
    CHECK(*loaded >= *idle + 15.0);
  }

  TEST_CASE("latency suite excludes warmup samples and keeps original seq")
  {
    ExperimentConfig config;
    config.sizes = {2048};
    config.count = 12;
    config.warmup = 10;
    config.period = std::chrono::milliseconds(5);
    config.transports = {kTransportZerocopy, kTransportBaselineLabel};

    auto dataset = run_latency_suite(config);
    REQUIRE(dataset.has_value());
    CHECK(dataset->complete());

    for (const char * transport : {kTransportZerocopy, kTransportBaselineLabel}) {
      std::vector<uint64_t> seqs;
      for (const Sample & sample : dataset->samples) {
        if (sample.transport == transport) {
          CHECK(sample.size_bytes == 2048);
          CHECK(sample.load_pct == 0);
          CHECK(sample.latency_ns > 0);
          seqs.push_back(sample.seq);
        }
      }
      REQUIRE(seqs.size() == 2);  // 12 published, first 10 are warmup
      CHECK(seqs[0] == 10);
      CHECK(seqs[1] == 11);
    }
  }

  TEST_CASE("load suite sweeps generated load at a fixed size")
  {
    ExperimentConfig config;
    config.sizes = {1024};
    config.count = 15;
    config.warmup = 5;
    config.period = std::chrono::milliseconds(5);
    config.loads = {0, 40};
    config.transports = {kTransportZerocopy};

    auto dataset = run_load_suite(config);
    REQUIRE(dataset.has_value());
    CHECK(dataset->complete());

    const auto cells = summarize(dataset->samples);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].key == CellKey{kTransportZerocopy, 1024, 0});
    CHECK(cells[1].key == CellKey{kTransportZerocopy, 1024, 40});
    CHECK(cells[0].count == 10);
    CHECK(cells[1].count == 10);
  }

  TEST_CASE("bridge suite measures baseline and both bridged routes")
  {
    ExperimentConfig config;
    config.sizes = {512};
    config.count = 12;
    config.warmup = 4;
    config.period = std::chrono::milliseconds(10);

    auto dataset = run_bridge_suite(config);
    REQUIRE(dataset.has_value());
    CHECK(dataset->complete());

    const auto cells = summarize(dataset->samples);
    REQUIRE(cells.size() == 3);
    std::set<std::string> transports;
    for (const auto & cell : cells) {
      transports.insert(cell.key.transport);
      CHECK(cell.key.size_bytes == 512);
      CHECK(cell.count == 8);
      CHECK(cell.min > 0);
    }
    CHECK(
      transports ==
      std::set<std::string>{
      kTransportBaselineLabel, kTransportBridgeZcToBaseline, kTransportBridgeBaselineToZc});
  }
}
