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

#include "zerocast/bench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace zerocast
{
namespace bench
{

namespace
{
constexpr char kCsvHeader[] = "transport,size_bytes,load_pct,seq,latency_ns";
}  // namespace

uint64_t percentile_nearest_rank(const std::vector<uint64_t> & sorted, double pct)
{
  const size_t rank = static_cast<size_t>(std::ceil(pct / 100.0 * sorted.size()));
  return sorted[std::max<size_t>(rank, 1) - 1];
}

double population_stddev(const std::vector<uint64_t> & values, double mean)
{
  double sum_sq = 0.0;
  for (uint64_t v : values) {
    const double d = static_cast<double>(v) - mean;
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq / static_cast<double>(values.size()));
}

std::vector<CellStats> summarize(const std::vector<Sample> & samples)
{
  std::map<CellKey, std::vector<uint64_t>> cells;
  for (const Sample & s : samples) {
    cells[CellKey{s.transport, s.size_bytes, s.load_pct}].push_back(s.latency_ns);
  }

  std::vector<CellStats> out;
  out.reserve(cells.size());
  for (auto & [key, values] : cells) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (uint64_t v : values) {
      sum += static_cast<double>(v);
    }
    CellStats stats;
    stats.key = key;
    stats.count = values.size();
    stats.min = values.front();
    stats.p50 = percentile_nearest_rank(values, 50.0);
    stats.p95 = percentile_nearest_rank(values, 95.0);
    stats.p99 = percentile_nearest_rank(values, 99.0);
    stats.max = values.back();
    stats.mean = sum / static_cast<double>(values.size());
    stats.stddev = population_stddev(values, stats.mean);
    stats.cv = stats.mean == 0.0 ? 0.0 : stats.stddev / stats.mean;
    out.push_back(stats);
  }
  return out;
}

std::string format_table(const std::vector<CellStats> & cells)
{
  std::ostringstream out;
  char line[256];
  std::snprintf(
    line, sizeof(line), "%-24s %10s %5s %6s %12s %12s %12s %12s %12s %14s %10s\n",
    "transport", "size", "load", "n", "min_ns", "p50_ns", "p95_ns", "p99_ns", "max_ns",
    "mean_ns", "cv");
  out << line;
  for (const CellStats & c : cells) {
    std::snprintf(
      line, sizeof(line),
      "%-24s %10llu %4u%% %6zu %12llu %12llu %12llu %12llu %12llu %14.1f %10.4f\n",
      c.key.transport.c_str(), static_cast<unsigned long long>(c.key.size_bytes),
      c.key.load_pct, c.count, static_cast<unsigned long long>(c.min),
      static_cast<unsigned long long>(c.p50), static_cast<unsigned long long>(c.p95),
      static_cast<unsigned long long>(c.p99), static_cast<unsigned long long>(c.max),
      c.mean, c.cv);
    out << line;
  }
  return out.str();
}

Status write_csv(
  const std::string & path, const std::vector<Sample> & samples,
  const std::vector<std::string> & comments)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    return Status(Errc::io_error, "cannot open for writing: " + path);
  }
  out << kCsvHeader << "\n";
  for (const std::string & comment : comments) {
    out << "# " << comment << "\n";
  }
  for (const Sample & s : samples) {
    out << s.transport << ',' << s.size_bytes << ',' << s.load_pct << ',' << s.seq << ','
        << s.latency_ns << "\n";
  }
  out.flush();
  if (!out) {
    return Status(Errc::io_error, "write failed: " + path);
  }
  return Status{};
}

Result<std::vector<Sample>> parse_csv(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    return Status(Errc::io_error, "cannot open: " + path);
  }
  std::vector<Sample> samples;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == kCsvHeader) {
      continue;
    }
    std::istringstream fields(line);
    Sample s;
    std::string token;
    if (!std::getline(fields, s.transport, ',')) {
      return Status(Errc::invalid_argument, "bad CSV line " + std::to_string(line_no));
    }
    try {
      if (!std::getline(fields, token, ',')) {throw std::invalid_argument(token);}
      s.size_bytes = std::stoull(token);
      if (!std::getline(fields, token, ',')) {throw std::invalid_argument(token);}
      s.load_pct = static_cast<uint32_t>(std::stoul(token));
      if (!std::getline(fields, token, ',')) {throw std::invalid_argument(token);}
      s.seq = std::stoull(token);
      if (!std::getline(fields, token, ',')) {throw std::invalid_argument(token);}
      s.latency_ns = std::stoull(token);
    } catch (const std::exception &) {
      return Status(Errc::invalid_argument, "bad CSV line " + std::to_string(line_no));
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace bench
}  // namespace zerocast
