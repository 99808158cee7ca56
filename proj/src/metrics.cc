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

#include "ipd/metrics.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "ipd/error.h"

namespace ipd {

namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string FormatMetricsRow(const MetricsRow& r) {
  char value[40];
  std::snprintf(value, sizeof(value), "%.17g", r.value);
  std::ostringstream os;
  os << r.experiment << ',' << r.algorithm << ',' << r.seed << ',' << r.outer << ','
     << r.inner << ',' << r.metric << ',' << value;
  return os.str();
}

void WriteMetricsCsv(std::ostream& out, const std::vector<MetricsRow>& rows, bool header) {
  if (header) out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << FormatMetricsRow(r) << '\n';
  if (!out) throw IoError("failed writing metrics");
}

void WriteMetricsCsv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  WriteMetricsCsv(out, rows, true);
}

std::vector<MetricsRow> ReadMetricsCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("metrics CSV is empty");
  auto cols = SplitCsv(line);
  auto expected = SplitCsv(kMetricsHeader);
  if (cols != expected) {
    std::string bad;
    for (std::size_t i = 0; i < std::max(cols.size(), expected.size()); ++i) {
      std::string got = i < cols.size() ? cols[i] : "<missing>";
      std::string want = i < expected.size() ? expected[i] : "<none>";
      if (got != want) bad += (bad.empty() ? "" : "; ") + got + " (expected " + want + ")";
    }
    throw SchemaError("metrics CSV schema mismatch: " + bad);
  }
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = SplitCsv(line);
    if (f.size() != expected.size()) {
      throw SchemaError("metrics CSV line " + std::to_string(lineno) + " has " +
                        std::to_string(f.size()) + " columns");
    }
    try {
      MetricsRow r;
      r.experiment = f[0];
      r.algorithm = f[1];
      r.seed = std::stoull(f[2]);
      r.outer = std::stoll(f[3]);
      r.inner = std::stoll(f[4]);
      r.metric = f[5];
      r.value = std::stod(f[6]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw SchemaError("metrics CSV line " + std::to_string(lineno) + " is malformed");
    }
  }
  return rows;
}

std::vector<MetricsRow> ReadMetricsCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics '" + path + "'");
  return ReadMetricsCsv(in);
}

void CheckUniqueKeys(const std::vector<MetricsRow>& rows) {
  std::set<std::tuple<std::string, std::uint64_t, std::int64_t, std::int64_t, std::string>> seen;
  for (const auto& r : rows) {
    if (!seen.emplace(r.experiment, r.seed, r.outer, r.inner, r.metric).second) {
      throw ContractError("duplicate metrics key: " + FormatMetricsRow(r));
    }
  }
}

std::vector<MetricsRow> Select(const std::vector<MetricsRow>& rows, const std::string& metric) {
  std::vector<MetricsRow> out;
  for (const auto& r : rows) {
    if (r.metric == metric) out.push_back(r);
  }
  return out;
}

}  // namespace ipd
