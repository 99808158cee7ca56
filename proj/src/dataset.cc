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

#include "ipd/dataset.h"

#include <fstream>

#include "ipd/error.h"

namespace ipd {

void TrajectoryDataset::Append(Trajectory t, int phase) {
  t.phase = phase;
  records_.push_back(std::move(t));
}

void TrajectoryDataset::Append(const std::vector<Trajectory>& ts, int phase) {
  records_.reserve(records_.size() + ts.size());
  for (const auto& t : ts) Append(t, phase);
}

std::size_t TrajectoryDataset::CountPhase(int phase) const {
  std::size_t n = 0;
  for (const auto& t : records_) n += t.phase == phase;
  return n;
}

void TrajectoryDataset::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  WriteTrajectories(out, records_);
}

TrajectoryDataset TrajectoryDataset::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  TrajectoryDataset d;
  for (auto& t : ReadTrajectories(in)) d.records_.push_back(std::move(t));
  return d;
}

std::uint64_t TrajectoryDataset::Checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : records_) {
    std::string line = TrajectoryToJson(t);
    line.push_back('\n');
    for (unsigned char c : line) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace ipd
