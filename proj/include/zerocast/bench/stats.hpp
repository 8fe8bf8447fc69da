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

#ifndef ZEROCAST__BENCH__STATS_HPP_
#define ZEROCAST__BENCH__STATS_HPP_

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "zerocast/status.hpp"

namespace zerocast
{
namespace bench
{

/// One latency measurement. `latency_ns` spans publish-call start to
/// callback entry, both read from the same host-wide monotonic clock.
struct Sample
{
  std::string transport;  // zerocopy | baseline | bridge_zc_to_baseline | ...
  uint64_t size_bytes{0};
  uint32_t load_pct{0};
  uint64_t seq{0};
  uint64_t latency_ns{0};
};

struct CellKey
{
  std::string transport;
  uint64_t size_bytes{0};
  uint32_t load_pct{0};

  bool operator<(const CellKey & o) const
  {
    return std::tie(transport, size_bytes, load_pct) <
           std::tie(o.transport, o.size_bytes, o.load_pct);
  }
  bool operator==(const CellKey & o) const
  {
    return transport == o.transport && size_bytes == o.size_bytes && load_pct == o.load_pct;
  }
};

/// Distribution summary of one (transport, size, load) cell. Percentiles use
/// the nearest-rank convention and stddev is the population form, so every
/// number here is reproducible bit-for-bit from the CSV.
struct CellStats
{
  CellKey key;
  size_t count{0};
  uint64_t min{0};
  uint64_t p50{0};
  uint64_t p95{0};
  uint64_t p99{0};
  uint64_t max{0};
  double mean{0.0};
  double stddev{0.0};
  double cv{0.0};  // stddev / mean; 0 when mean is 0
};

/// Nearest-rank percentile: the ceil(pct/100 * n)-th smallest value
/// (1-indexed). `sorted` must be ascending and nonempty; pct in (0, 100].
uint64_t percentile_nearest_rank(const std::vector<uint64_t> & sorted, double pct);

/// Population standard deviation (divide by n, not n-1).
double population_stddev(const std::vector<uint64_t> & values, double mean);

/// Groups samples by cell and summarizes each; cells sorted by key.
std::vector<CellStats> summarize(const std::vector<Sample> & samples);

/// Renders the stats as an aligned text table.
std::string format_table(const std::vector<CellStats> & cells);

/// Writes `transport,size_bytes,load_pct,seq,latency_ns` rows. Each entry of
/// `comments` becomes a `# ...` line after the header.
Status write_csv(
  const std::string & path, const std::vector<Sample> & samples,
  const std::vector<std::string> & comments = {});

/// Inverse of write_csv; `#` lines and the header are skipped.
Result<std::vector<Sample>> parse_csv(const std::string & path);

}  // namespace bench
}  // namespace zerocast

#endif  // ZEROCAST__BENCH__STATS_HPP_
