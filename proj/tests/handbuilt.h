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

// Hand-set model parameters with closed-form predictions.

#ifndef IPD_TESTS_HANDBUILT_H_
#define IPD_TESTS_HANDBUILT_H_

#include <cmath>

#include "ipd/nn/model.h"
#include "ipd/nn/recurrent.h"

namespace ipd::testing {

// Predicts reward `r` after every token; uniform action and observation
// heads.
inline nn::ModelParams ConstantRewardModel(double r, int hidden = 2, int embed = 2) {
  nn::ModelArch arch;
  arch.hidden_dim = hidden;
  arch.embed_dim = embed;
  nn::ModelParams p(arch);
  p.block(nn::Block::kHeadRewardB)(0, 0) = r;
  return p;
}

// One-unit model whose state forgets everything but the latest act token:
// the update gate is shut (sigmoid(-1000) == 0 in double precision) and the
// candidate reads only the action embedding (C -> 1, D -> 0). The reward
// head then predicts q_c after C and q_d after D. Action and observation
// heads are zero, so the prior is (0.5, 0.5).
inline nn::ModelParams ActionValueModel(double q_c, double q_d) {
  nn::ModelArch arch;
  arch.hidden_dim = 1;
  arch.embed_dim = 1;
  nn::ModelParams p(arch);
  p.block(nn::Block::kActionEmbed)(0, 0) = 1.0;
  p.block(nn::Block::kGruBx)(0, 0) = -1000.0;  // update gate
  p.block(nn::Block::kGruWx)(2, 0) = 1.0;      // candidate
  const double s = nn::Swish(std::tanh(1.0));
  p.block(nn::Block::kHeadRewardW)(0, 0) = (q_c - q_d) / s;
  p.block(nn::Block::kHeadRewardB)(0, 0) = q_d;
  return p;
}

}  // namespace ipd::testing

#endif  // IPD_TESTS_HANDBUILT_H_
