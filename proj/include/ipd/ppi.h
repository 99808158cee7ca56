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

// Predictive policy improvement: a recurrent sequence model is trained
// self-supervised on interaction histories, then deployed as
//
//   pi(a | x) = p(a | x) * exp(beta * Q(x, a)) / Z
//
// where p is the model's own action prediction and Q is a Monte-Carlo
// return estimate from rollouts inside the model.
//
// Token layout (two GRU steps per round, optional conditioning step first):
//
//   percept_t = { obs o_t, reward r_{t-1} }   -> action head predicts a_t
//   act_t     = { action a_t }                -> obs head predicts o_{t+1},
//                                                reward head predicts r_t
//
// so every prediction is conditioned on exactly the tokens that precede it.

#ifndef IPD_PPI_H_
#define IPD_PPI_H_

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "ipd/agent.h"
#include "ipd/dataset.h"
#include "ipd/metrics.h"
#include "ipd/nn/model.h"
#include "ipd/nn/optim.h"
#include "ipd/nn/recurrent.h"

namespace ipd {

struct LossWeights {
  double obs = 1.0;
  double action = 1.0;
  double reward = 1.0;
};

struct PpiConfig {
  nn::ModelArch arch;
  int n_phases = 30;
  int n_samples_per_phase = 20000;
  int n_pretrain_trajectories = 200000;
  int train_epochs = 10;
  int train_batch_size = 256;
  double beta = 0.01;
  int rollout_depth = 15;
  int n_rollouts_per_action = 16;
  double rollout_gamma = 0.99;
  LossWeights loss_weights;
  nn::OptimizerConfig optimizer;
  // Sample rollout rewards from N(mean, reward_noise_std^2) instead of
  // using the predicted mean.
  bool reward_noise = false;
  double reward_noise_std = 1.0;
};

void Validate(const PpiConfig& cfg);

// n episodes between pairs of freshly sampled uniform tabular policies;
// both perspectives are stored with phase 0. With `opponent_conditioning`
// each record carries the conditioning vector of its co-player.
TrajectoryDataset BuildPretrainDataset(int n, const EpisodeConfig& cfg, RandomStream& rng,
                                       bool opponent_conditioning = false);

nn::TokenBatch PpiTokens(std::span<const Trajectory* const> batch);

// Step index (in the token stream) of the percept / act token of round t.
int PerceptStep(bool conditioned, int t);
int ActStep(bool conditioned, int t);

struct SequenceLossParts {
  double total = 0.0;
  double obs = 0.0;     // mean cross-entropy of o_{t+1} over N*(T-1) terms
  double action = 0.0;  // mean cross-entropy of a_t over N*T terms
  double reward = 0.0;  // mean squared error of r_t over N*T terms
};

// Weighted next-token loss. When `grads` is non-null the exact gradient is
// accumulated into it. Throws NonFiniteError naming the round index.
SequenceLossParts SequenceLoss(const nn::ModelParams& params,
                               std::span<const Trajectory* const> batch,
                               const LossWeights& weights, nn::Gradients* grads = nullptr);

struct TrainResult {
  nn::ModelParams params;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

// Fresh initialization, then train_epochs shuffled passes with AdamW and
// global-norm clipping.
TrainResult TrainSequenceModel(const TrajectoryDataset& data, const PpiConfig& cfg,
                               RandomStream& rng);

// Boltzmann re-weighting of a prior by action values. beta == 0 returns the
// prior unchanged; zero-probability actions stay at zero.
ActionDist ImprovedPolicy(const ActionDist& prior, const std::array<double, 2>& q,
                          double beta);

// KL(improved || prior) in nats.
double KlDivergence(const ActionDist& p, const ActionDist& q);

// Running sums over the decisions an agent makes while deployed.
struct DecisionStats {
  double kl_sum = 0.0;
  double flatness_sum = 0.0;
  double prior_coop_sum = 0.0;
  double improved_coop_sum = 0.0;
  std::int64_t count = 0;
  double support_threshold = 0.05;

  double mean_kl() const { return count ? kl_sum / count : 0.0; }
  double mean_flatness() const { return count ? flatness_sum / count : 0.0; }
};

class PpiAgent : public Agent {
 public:
  PpiAgent(nn::ModelParams params, PpiConfig cfg);

  std::unique_ptr<BatchSession> NewSession(std::span<const std::vector<double>* const> conditioning,
                                           const EpisodeConfig& cfg) const override;

  const nn::ModelParams& params() const { return params_; }
  const PpiConfig& config() const { return cfg_; }

  // Decisions made by sessions of this agent are accumulated into `stats`
  // (may be null).
  void set_stats(DecisionStats* stats) { stats_ = stats; }

 private:
  nn::ModelParams params_;
  PpiConfig cfg_;
  DecisionStats* stats_ = nullptr;
};

// Action values for both actions at the hidden states `h` (one row per
// history, after its latest percept token), each averaged over
// n_rollouts_per_action rollouts of min(rollout_depth, remaining[i]) rounds.
std::vector<std::array<double, 2>> RolloutQ(const nn::ModelParams& params, const nn::Matrix& h,
                                            std::span<const int> remaining, const PpiConfig& cfg,
                                            std::span<RandomStream* const> rngs);

// Hidden state after consuming `history` and the percept for `current`.
nn::Matrix EncodeHistory(const nn::ModelParams& params, const Trajectory& history,
                         Observation current);

// Prior p(. | x) at the end of a history.
ActionDist PriorPolicy(const nn::ModelParams& params, const Trajectory& history,
                       Observation current);

double EstimateQ(const nn::ModelParams& params, const Trajectory& history, Observation current,
                 Action candidate, int horizon, const PpiConfig& cfg, RandomStream& rng);

ActionDist ImprovedPolicyAt(const nn::ModelParams& params, const Trajectory& history,
                            Observation current, int horizon, const PpiConfig& cfg,
                            RandomStream& rng);

// Produces each learner's new trajectories for one phase given the agents
// built from the current models. Appends any metrics it computes.
using PpiCollector = std::function<std::vector<std::vector<Trajectory>>(
    int phase, std::span<PpiAgent* const> learners, RandomStream& rng,
    std::vector<MetricsRow>& metrics)>;

struct PpiRunResult {
  std::vector<nn::ModelParams> params;
  std::vector<TrajectoryDataset> datasets;
  std::vector<MetricsRow> metrics;
};

struct PpiRunOptions {
  // Models for phase 1; when empty they are trained on the initial data.
  std::vector<nn::ModelParams> initial_params;
  // Called after every phase with the phase index, the current models and
  // all metrics so far.
  std::function<void(int, const std::vector<nn::ModelParams>&, const std::vector<MetricsRow>&)>
      on_phase;
};

// For k = 1..n_phases: deploy models trained on D_{k-1}, collect R_k,
// D_k = D_{k-1} + R_k. Returns the models retrained on the final datasets
// (with n_phases = 0, the models trained on D_0).
PpiRunResult RunPpi(std::vector<TrajectoryDataset> initial, const PpiConfig& cfg,
                    const PpiCollector& collect, RandomStream& rng, const MetricsContext& ctx,
                    const PpiRunOptions& options = {});

}  // namespace ipd

#endif  // IPD_PPI_H_
