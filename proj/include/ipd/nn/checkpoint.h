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

// Binary checkpoint container, little-endian:
//
//   magic    "IPDCKPT\0"           8 bytes
//   version  u32                   (kCheckpointVersion)
//   arch     i32 hidden, i32 embed, i32 conditioning_dim
//   nblocks  u32
//   per block: u32 name_len, name bytes, i32 rows, i32 cols, u64 offset
//   count    u64                   number of float64 values
//   values   count * f64           raw IEEE-754 bits
//   checksum u64                   FNV-1a of the value bytes

#ifndef IPD_NN_CHECKPOINT_H_
#define IPD_NN_CHECKPOINT_H_

#include <cstdint>
#include <string>

#include "ipd/nn/model.h"

namespace ipd::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void SaveCheckpoint(const ModelParams& params, const std::string& path);

// Throws IoError (unreadable), VersionError (wrong magic/version) or
// CorruptError (truncated, inconsistent or checksum failure).
ModelParams LoadCheckpoint(const std::string& path);

}  // namespace ipd::nn

#endif  // IPD_NN_CHECKPOINT_H_
