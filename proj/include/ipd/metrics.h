// Copyright 2026 The ipdsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IPD_METRICS_H_
#define IPD_METRICS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ipd {

// One logged measurement. `inner` is the round within an episode, or -1 for
// an aggregate over whole episodes.
struct MetricsRow {
  std::string experiment;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::int64_t outer = 0;
  std::int64_t inner = -1;
  std::string metric;
  double value = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

inline constexpr const char* kMetricsHeader = "experiment,algorithm,seed,outer,inner,metric,value";

// Fills in the constant part of each row.
struct MetricsContext {
  std::string experiment;
  std::string algorithm;
  std::uint64_t seed = 0;

  MetricsRow Row(std::int64_t outer, std::int64_t inner, std::string metric, double value) const {
    return {experiment, algorithm, seed, outer, inner, std::move(metric), value};
  }
};

// Values are written with 17 significant digits so a CSV round trip is
// exact.
std::string FormatMetricsRow(const MetricsRow& row);
void WriteMetricsCsv(std::ostream& out, const std::vector<MetricsRow>& rows, bool header = true);
void WriteMetricsCsv(const std::string& path, const std::vector<MetricsRow>& rows);

// Throws SchemaError naming the offending columns if the header differs.
std::vector<MetricsRow> ReadMetricsCsv(std::istream& in);
std::vector<MetricsRow> ReadMetricsCsv(const std::string& path);

// Throws ContractError on a repeated (experiment, seed, outer, inner, metric)
// key.
void CheckUniqueKeys(const std::vector<MetricsRow>& rows);

// Rows whose metric name matches, in input order.
std::vector<MetricsRow> Select(const std::vector<MetricsRow>& rows, const std::string& metric);

}  // namespace ipd

#endif  // IPD_METRICS_H_
