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

#include "ipd/nn/model.h"

#include <cmath>
#include <cstring>

#include "ipd/error.h"

namespace ipd::nn {

void Validate(const ModelArch& arch) {
  if (arch.hidden_dim < 1 || arch.embed_dim < 1) {
    throw ConfigError("model dims must be >= 1");
  }
  if (arch.conditioning_dim != 0 && arch.conditioning_dim != kConditioningDim) {
    throw ConfigError("conditioning_dim must be 0 or 10");
  }
}

ModelParams::ModelParams(const ModelArch& arch) : arch_(arch) {
  Validate(arch);
  const int e = arch.embed_dim;
  const int h = arch.hidden_dim;
  struct Spec {
    const char* name;
    int rows, cols;
    bool bias;
    int fan_in;
  };
  const Spec specs[kNumBlocks] = {
      {"obs_embed", e, kObsVocab, false, kObsVocab},
      {"action_embed", e, kActionVocab, false, kActionVocab},
      {"reward_embed", e, kRewardInputDim, false, kRewardInputDim},
      {"cond_embed", e, arch.conditioning_dim, false, arch.conditioning_dim},
      {"gru_wx", 3 * h, e, false, e},
      {"gru_wh", 3 * h, h, false, h},
      {"gru_bx", 1, 3 * h, true, e},
      {"gru_bh", 1, 3 * h, true, h},
      {"head_obs_w", kObsVocab, h, false, h},
      {"head_obs_b", 1, kObsVocab, true, h},
      {"head_action_w", kActionVocab, h, false, h},
      {"head_action_b", 1, kActionVocab, true, h},
      {"head_reward_w", 1, h, false, h},
      {"head_reward_b", 1, 1, true, h},
      {"value_w", 1, h, false, h},
      {"value_b", 1, 1, true, h},
  };
  std::size_t offset = 0;
  blocks_.reserve(kNumBlocks);
  for (const Spec& s : specs) {
    BlockInfo b{s.name, offset, s.rows, s.cols, s.bias, s.fan_in};
    offset += b.size();
    blocks_.push_back(b);
  }
  data_.assign(offset, 0.0);
}

MatrixMap ModelParams::block(Block b) {
  const BlockInfo& i = info(b);
  return MatrixMap(data_.data() + i.offset, i.rows, i.cols);
}

ConstMatrixMap ModelParams::block(Block b) const {
  const BlockInfo& i = info(b);
  return ConstMatrixMap(data_.data() + i.offset, i.rows, i.cols);
}

void ModelParams::SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool ModelParams::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool ModelParams::SameShape(const ModelParams& other) const {
  return arch_ == other.arch_ && data_.size() == other.data_.size();
}

std::uint64_t ModelParams::Checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* p = reinterpret_cast<const unsigned char*>(data_.data());
  for (std::size_t i = 0; i < data_.size() * sizeof(double); ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

ModelParams InitParams(const ModelArch& arch, RandomStream& rng) {
  ModelParams p(arch);
  for (const BlockInfo& b : p.blocks()) {
    if (b.is_bias || b.size() == 0) continue;
    double bound = 1.0 / std::sqrt(static_cast<double>(b.fan_in));
    for (std::size_t k = 0; k < b.size(); ++k) {
      p.data()[b.offset + k] = rng.Uniform(-bound, bound);
    }
  }
  return p;
}

}  // namespace ipd::nn
