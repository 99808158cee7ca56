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

// Run configuration. A document is resolved in three layers: the profile
// defaults ("full" or "desk"), then the keys present in the file, then
// command-line overrides. Unknown keys are rejected everywhere.

#ifndef IPD_CONFIG_H_
#define IPD_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ipd/a2c.h"
#include "ipd/game.h"
#include "ipd/population.h"
#include "ipd/ppi.h"

namespace ipd {

enum class ExperimentKind {
  kMixedTraining,
  kStep1BestResponse,
  kStep2Extortion,
  kStep3MutualExtortion,
  kAblationOpponentId,
  kAblationNoTabular,
  kEquilibriumCheck,
  kEvalVsFixed,
};

ExperimentKind ParseExperimentKind(const std::string& s);
const char* ExperimentKindName(ExperimentKind k);

enum class Algorithm { kPpi, kA2c };
Algorithm ParseAlgorithm(const std::string& s);
const char* AlgorithmName(Algorithm a);

struct A2cSettings {
  // "auto" selects the table column matching the experiment; otherwise
  // "step1".."step4".
  std::string preset = "auto";
  // Field overrides applied on top of the preset (JSON object text).
  std::string overrides = "{}";
  int iterations = 1000;
  // Both learners read and update one parameter set.
  bool shared_parameters = false;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kMixedTraining;
  Algorithm algorithm = Algorithm::kPpi;
  int eval_episodes = 200;
  std::vector<std::string> eval_strategies = {"AllC", "AllD", "TFT", "Random50"};
  // Outer index at which early within-episode curves are recorded.
  int early_phase = 8;
  int early_iteration = 100;
  // Training metrics for A2C are emitted every log_every iterations.
  int log_every = 1;
  // "Final" statistics average the last final_fraction of outer indices.
  double final_fraction = 0.1;
  bool log_pairings = true;
  bool save_datasets = true;
};

struct PathsConfig {
  // Empty: $IPD_OUT_ROOT, else "runs".
  std::string out_root;
  std::string fixed_icl;   // step 2 input; default the step-1 run of the same seed
  std::string extorter;    // step 3 input; default the step-2 run of the same seed
  std::string checkpoint;  // eval / equilibrium-check input
  std::string pretrain_dataset;  // optional precomputed D_0
};

struct RunConfig {
  std::string profile = "full";
  EpisodeConfig episode;
  PoolConfig pool;
  PpiConfig ppi;
  A2cSettings a2c;
  ExperimentConfig experiment;
  PathsConfig paths;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

// Defaults of a named profile ("full" or "desk").
RunConfig ProfileDefaults(const std::string& profile);

// Parses a JSON document on top of the profile named by its "profile" key
// (required unless `profile` is given, which then wins). Throws ConfigError
// naming the offending key.
RunConfig ParseRunConfig(const std::string& json_text, const std::string& profile = "");
RunConfig LoadRunConfig(const std::string& path, const std::string& profile = "");

// Fully resolved document; ParseRunConfig(ToJson(c)) == c.
std::string RunConfigToJson(const RunConfig& cfg);

void Validate(const RunConfig& cfg);

// The A2C hyperparameters for the configured experiment.
A2cHyper ResolveA2c(const RunConfig& cfg);

// Model architecture the configured experiment trains (adds the
// conditioning projection for the opponent-ID ablation).
nn::ModelArch ResolveArch(const RunConfig& cfg);

// Pool settings the configured experiment uses.
PoolConfig ResolvePool(const RunConfig& cfg);

std::string ResolveOutRoot(const RunConfig& cfg);

}  // namespace ipd

#endif  // IPD_CONFIG_H_
