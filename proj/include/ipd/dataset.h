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

#ifndef IPD_DATASET_H_
#define IPD_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ipd/game.h"

namespace ipd {

// Append-only collection of trajectories, each tagged with its phase of
// origin (0 for the initial dataset).
class TrajectoryDataset {
 public:
  void Append(Trajectory t, int phase);
  void Append(const std::vector<Trajectory>& ts, int phase);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<Trajectory>& records() const { return records_; }
  const Trajectory& operator[](std::size_t i) const { return records_[i]; }
  std::size_t CountPhase(int phase) const;

  void Save(const std::string& path) const;
  static TrajectoryDataset Load(const std::string& path);

  // FNV-1a over the serialized records.
  std::uint64_t Checksum() const;

 private:
  std::vector<Trajectory> records_;
};

}  // namespace ipd

#endif  // IPD_DATASET_H_
