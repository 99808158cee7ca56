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

// Experiment protocol: best response against fixed strategies (step 1),
// extortion of a frozen in-context learner (step 2), mutual shaping from
// two extorters (step 3), mixed-pool training and its two ablations, plus
// evaluation and equilibrium diagnostics.
//
// Every run writes into <out_root>/<experiment>/<algorithm>/<seed>/:
//   config.json     resolved configuration
//   metrics.csv     experiment,algorithm,seed,outer,inner,metric,value
//   pairings.csv    one line per training episode (when enabled)
//   *.ckpt          model checkpoints
//   *.jsonl         datasets (PPI, when enabled)
//   COMPLETE        written last

#ifndef IPD_EXPERIMENTS_H_
#define IPD_EXPERIMENTS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ipd/agent.h"
#include "ipd/config.h"
#include "ipd/metrics.h"
#include "ipd/ppi.h"

namespace ipd {

// Fraction of Cooperate actions over rounds [begin, end).
double CooperationRate(const Trajectory& t, int begin, int end);

// Mean per-round reward over the last quarter of the episode.
double FinalQuarterReward(const Trajectory& t);

struct EquilibriumReport {
  double on_path_action_kl = 0.0;
  double q_flatness = 0.0;
  double support_threshold = 0.05;
  std::int64_t steps = 0;
};

// Re-evaluates, at every visited history of `trajectories`, the prior, the
// rollout values and the improved policy of `params`, and averages
// KL(improved || prior) and the spread of values over supported actions.
EquilibriumReport EquilibriumCheck(const nn::ModelParams& params,
                                   std::span<const Trajectory> trajectories, const PpiConfig& cfg,
                                   int horizon, RandomStream& rng,
                                   double support_threshold = 0.05);

struct StrategyEval {
  std::string strategy;
  double final_quarter_reward = 0.0;  // mean over episodes
  double mean_return = 0.0;
  double oracle_per_round = 0.0;      // best-response value / horizon
  std::vector<double> reward_curve;   // per round, mean over episodes
  std::vector<double> coop_curve;
};

// `agent` plays `episodes` episodes against each named strategy.
std::vector<StrategyEval> EvaluateVsStrategies(const Agent& agent,
                                               const std::vector<std::string>& strategies,
                                               int episodes, const EpisodeConfig& cfg,
                                               RandomStream& rng);

struct RunHooks {
  // Progress messages.
  std::function<void(const std::string&)> log;
  // Polled between phases / iterations; returning true stops the run with
  // InterruptedError after flushing what was collected so far.
  std::function<bool()> should_stop;
};

std::string RunDirectory(const RunConfig& cfg, std::uint64_t seed);

struct RunOutput {
  std::string dir;
  std::vector<MetricsRow> rows;
};

// Runs the configured experiment for one seed. Throws PreconditionError
// when an input checkpoint is missing, and refuses to run when another
// process holds the directory lock.
RunOutput RunExperiment(const RunConfig& cfg, std::uint64_t seed, const RunHooks& hooks = {});

// Builds D_0 for the configured experiment (tabular pairs, uniform random
// actions for the no-tabular ablation, conditioned records for the
// opponent-ID ablation).
TrajectoryDataset BuildInitialDataset(const RunConfig& cfg, std::uint64_t seed);

// Mean of the metric over the last `fraction` of its outer indices
// (at least one).
double FinalMean(const std::vector<MetricsRow>& rows, const std::string& metric,
                 double fraction);

// Spearman rank correlation with average ranks for ties.
double Spearman(std::span<const double> x, std::span<const double> y);

}  // namespace ipd

#endif  // IPD_EXPERIMENTS_H_
