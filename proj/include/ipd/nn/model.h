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

// Parameter store for the recurrent sequence model: modality embeddings, a
// GRU cell and linear output heads, all kept in one flat float64 buffer.

#ifndef IPD_NN_MODEL_H_
#define IPD_NN_MODEL_H_

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ipd/rng.h"

namespace ipd::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
// Aligned so that vectorized reductions over block maps group terms the same
// way on every run; plain malloc alignment varies and changes the rounding.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

inline constexpr int kObsVocab = 5;
inline constexpr int kActionVocab = 2;
inline constexpr int kRewardInputDim = 1;
inline constexpr int kConditioningDim = 10;

struct ModelArch {
  int hidden_dim = 128;
  int embed_dim = 32;
  // 0, or kConditioningDim when an opponent-conditioning step is used.
  int conditioning_dim = 0;

  bool operator==(const ModelArch&) const = default;
};

void Validate(const ModelArch& arch);

enum class Block : int {
  kObsEmbed = 0,     // E x 5
  kActionEmbed,      // E x 2
  kRewardEmbed,      // E x 1
  kCondEmbed,        // E x conditioning_dim (may be empty)
  kGruWx,            // 3H x E, gate order (update, reset, candidate)
  kGruWh,            // 3H x H
  kGruBx,            // 1 x 3H
  kGruBh,            // 1 x 3H
  kHeadObsW,         // 5 x H
  kHeadObsB,         // 1 x 5
  kHeadActionW,      // 2 x H
  kHeadActionB,      // 1 x 2
  kHeadRewardW,      // 1 x H
  kHeadRewardB,      // 1 x 1
  kValueW,           // 1 x H
  kValueB,           // 1 x 1
};
inline constexpr int kNumBlocks = 16;

struct BlockInfo {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  bool is_bias = false;
  int fan_in = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Flat parameter (or gradient) store with a fixed block layout.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const ModelArch& arch);  // all zeros

  const ModelArch& arch() const { return arch_; }
  const std::vector<BlockInfo>& blocks() const { return blocks_; }
  const BlockInfo& info(Block b) const { return blocks_[static_cast<int>(b)]; }

  MatrixMap block(Block b);
  ConstMatrixMap block(Block b) const;

  ParamVector& data() { return data_; }
  const ParamVector& data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  void SetZero();
  bool AllFinite() const;
  // Same architecture and block layout.
  bool SameShape(const ModelParams& other) const;
  // FNV-1a over the raw bytes; used to verify that frozen models stay frozen.
  std::uint64_t Checksum() const;

 private:
  ModelArch arch_;
  std::vector<BlockInfo> blocks_;
  ParamVector data_;
};

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights, zero biases.
ModelParams InitParams(const ModelArch& arch, RandomStream& rng);

using Gradients = ModelParams;

}  // namespace ipd::nn

#endif  // IPD_NN_MODEL_H_
