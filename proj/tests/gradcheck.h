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

// Central finite-difference checks of the analytic gradients, shared by
// the unit tests and the acceptance binary.

#ifndef IPD_TESTS_GRADCHECK_H_
#define IPD_TESTS_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ipd/a2c.h"
#include "ipd/game.h"
#include "ipd/nn/model.h"
#include "ipd/population.h"
#include "ipd/ppi.h"
#include "ipd/rng.h"
#include "ipd/tabular.h"

namespace ipd::testing {

inline constexpr double kFdStep = 1e-5;
// Entries where both gradients are below this are compared absolutely.
inline constexpr double kFdFloor = 1e-7;

struct FdResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<block>[i]"
  std::size_t checked = 0;
};

inline FdResult CompareWithFiniteDifferences(
    nn::ModelParams params, const nn::Gradients& analytic,
    const std::function<double(const nn::ModelParams&)>& loss) {
  FdResult r;
  for (const auto& b : params.blocks()) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      const std::size_t i = b.offset + k;
      const double w = params.data()[i];
      params.data()[i] = w + kFdStep;
      const double up = loss(params);
      params.data()[i] = w - kFdStep;
      const double down = loss(params);
      params.data()[i] = w;
      const double fd = (up - down) / (2.0 * kFdStep);
      const double a = analytic.data()[i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), kFdFloor});
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = b.name + "[" + std::to_string(k) + "]";
      }
      ++r.checked;
    }
  }
  return r;
}

// Random tiny problem: `n` episodes of length `horizon` between random
// tabular policies, optionally with opponent conditioning.
inline std::vector<Trajectory> RandomTrajectories(int n, int horizon, bool conditioned,
                                                  RandomStream& rng) {
  EpisodeConfig cfg;
  cfg.horizon = horizon;
  std::vector<Trajectory> out;
  for (int i = 0; i < n; ++i) {
    TabularPolicy a = SampleUniformTabular(rng), b = SampleUniformTabular(rng);
    TabularEpisodePolicy pa(a), pb(b);
    auto [t1, t2] = PlayEpisode(pa, pb, cfg, rng);
    if (conditioned) t1.conditioning = ConditioningVector(b);
    out.push_back(std::move(t1));
  }
  return out;
}

inline nn::ModelParams RandomTinyModel(bool conditioned, RandomStream& rng) {
  nn::ModelArch arch;
  arch.hidden_dim = 4;
  arch.embed_dim = 3;
  arch.conditioning_dim = conditioned ? nn::kConditioningDim : 0;
  nn::ModelParams p = nn::InitParams(arch, rng);
  // Initialization leaves biases at zero; randomize everything so every
  // path carries gradient.
  for (double& x : p.data()) x = rng.Uniform(-0.8, 0.8);
  return p;
}

inline FdResult SequenceLossCheck(RandomStream& rng, int horizon = 6) {
  const bool cond = rng.Bernoulli(0.5);
  nn::ModelParams p = RandomTinyModel(cond, rng);
  auto trajs = RandomTrajectories(3, horizon, cond, rng);
  std::vector<const Trajectory*> batch;
  for (const auto& t : trajs) batch.push_back(&t);
  LossWeights w{rng.Uniform(0.5, 1.5), rng.Uniform(0.5, 1.5), rng.Uniform(0.5, 1.5)};
  nn::Gradients g(p.arch());
  SequenceLoss(p, batch, w, &g);
  return CompareWithFiniteDifferences(
      p, g, [&](const nn::ModelParams& q) { return SequenceLoss(q, batch, w).total; });
}

inline FdResult A2cLossCheck(RandomStream& rng, int horizon = 6) {
  const bool cond = rng.Bernoulli(0.5);
  nn::ModelParams p = RandomTinyModel(cond, rng);
  auto trajs = RandomTrajectories(3, horizon, cond, rng);
  std::vector<const Trajectory*> batch;
  for (const auto& t : trajs) batch.push_back(&t);
  A2cHyper h;
  h.value_coefficient = rng.Uniform(0.1, 1.0);
  h.entropy_reg = rng.Uniform(0.0, 0.1);
  std::vector<Advantages> adv;
  for (int i = 0; i < 3; ++i) {
    Advantages a;
    for (int t = 0; t < horizon; ++t) {
      a.advantages.push_back(rng.Uniform(-1, 1));
      a.targets.push_back(rng.Uniform(-1, 1));
    }
    adv.push_back(std::move(a));
  }
  nn::Gradients g(p.arch());
  A2cLoss(p, batch, adv, h, &g);
  return CompareWithFiniteDifferences(
      p, g, [&](const nn::ModelParams& q) { return A2cLoss(q, batch, adv, h).total; });
}

}  // namespace ipd::testing

#endif  // IPD_TESTS_GRADCHECK_H_
