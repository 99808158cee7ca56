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

// Independent advantage actor-critic over observation histories. The
// network is the same GRU as the sequence model; it reads one observation
// token per round (after an optional conditioning step) and the action and
// value heads are decoded at every round.

#ifndef IPD_A2C_H_
#define IPD_A2C_H_

#include <functional>
#include <span>
#include <vector>

#include "ipd/agent.h"
#include "ipd/metrics.h"
#include "ipd/nn/model.h"
#include "ipd/nn/optim.h"
#include "ipd/nn/recurrent.h"

namespace ipd {

struct A2cHyper {
  int batch_size = 2048;
  double reward_rescaling = 0.2;
  double gamma = 0.99;
  double td_lambda = 0.99;
  double gae_lambda = 0.99;
  double value_coefficient = 0.5;
  double entropy_reg = 0.001;
  double learning_rate = 0.005;
  double adam_epsilon = 1e-5;
  double max_grad_norm = 1.0;
  bool advantages_normalization = true;
};

void Validate(const A2cHyper& h);

// Columns of the published hyperparameter table, step in 1..4.
A2cHyper A2cPreset(int step);

// Adam with the table's epsilon and no weight decay.
nn::OptimizerConfig A2cOptimizer(const A2cHyper& h);

nn::TokenBatch A2cTokens(std::span<const Trajectory* const> batch);

struct PolicyValueOut {
  ActionDist dist;
  double value = 0.0;
};

// Policy and value after consuming the observations of `history` and then
// `current`.
PolicyValueOut PolicyValue(const nn::ModelParams& params, const Trajectory& history,
                           Observation current);

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> targets;
};

// One episode. Rewards are multiplied by reward_rescaling first; the value
// after the last round is `bootstrap`. No normalization.
Advantages ComputeAdvantages(std::span<const double> rewards, std::span<const double> values,
                             double bootstrap, const A2cHyper& h);

// Standardizes all advantages of a batch to mean 0, std 1 (1e-8 added to
// the divisor).
void NormalizeAdvantages(std::vector<Advantages>& batch);

struct A2cLossParts {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;  // mean per-step policy entropy, nats
};

// Sum over rounds, mean over episodes. Advantages and targets are constants.
A2cLossParts A2cLoss(const nn::ModelParams& params, std::span<const Trajectory* const> batch,
                     std::span<const Advantages> adv, const A2cHyper& h,
                     nn::Gradients* grads = nullptr);

// Value estimates V(x_<=t) of the current parameters for each episode.
std::vector<std::vector<double>> A2cValues(const nn::ModelParams& params,
                                           std::span<const Trajectory* const> batch);

class A2cAgent : public Agent {
 public:
  explicit A2cAgent(nn::ModelParams params);

  std::unique_ptr<BatchSession> NewSession(std::span<const std::vector<double>* const> conditioning,
                                           const EpisodeConfig& cfg) const override;

  const nn::ModelParams& params() const { return params_; }

 private:
  nn::ModelParams params_;
};

struct A2cLearner {
  nn::ModelParams params;
  nn::OptState opt;
};

A2cLearner InitA2cLearner(const nn::ModelArch& arch, RandomStream& rng);

struct A2cStepStats {
  double loss = 0.0;
  double entropy = 0.0;
  double mean_return = 0.0;
  double coop_rate = 0.0;
  double grad_norm = 0.0;
};

// Advantages, one clipped Adam step on `trajectories` (collected with the
// current parameters).
A2cStepStats A2cUpdate(A2cLearner& learner, std::span<const Trajectory> trajectories,
                       const A2cHyper& h);

// Produces each learner's on-policy trajectories for one iteration.
using A2cCollector = std::function<std::vector<std::vector<Trajectory>>(
    int iteration, std::span<const A2cAgent* const> learners, RandomStream& rng,
    std::vector<MetricsRow>& metrics)>;

// Collect with the current snapshots, then update every learner. Emits
// per-learner return, cooperation rate and entropy at outer = iteration.
std::vector<MetricsRow> A2cTrainIteration(std::vector<A2cLearner>& learners, int iteration,
                                          const A2cCollector& collect, const A2cHyper& h,
                                          RandomStream& rng, const MetricsContext& ctx);

}  // namespace ipd

#endif  // IPD_A2C_H_
