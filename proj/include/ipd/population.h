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

// Mixed-pool matchup scheduling and the two ablation pathways.

#ifndef IPD_POPULATION_H_
#define IPD_POPULATION_H_

#include <string>
#include <vector>

#include "ipd/agent.h"
#include "ipd/dataset.h"
#include "ipd/nn/recurrent.h"
#include "ipd/rng.h"

namespace ipd {

enum class Ablation { kNone, kOpponentId, kNoTabular };

Ablation ParseAblation(const std::string& s);
const char* AblationName(Ablation a);

struct PoolConfig {
  // Probability that a learner's episode is against another learner.
  double learner_fraction = 0.5;
  Ablation ablation = Ablation::kNone;
  int n_learners = 2;
  // Store the tabular side of learner-vs-tabular episodes as well.
  bool tabular_both_perspectives = false;
};

void Validate(const PoolConfig& cfg);

// Log-probabilities are clamped to [kConditioningClamp, 1 - kConditioningClamp]
// before the log.
inline constexpr double kConditioningClamp = 1e-6;

// z = (log P(C|o), log P(D|o)) for o in (Start, CC, CD, DC, DD). Learned
// opponents are represented by the zero vector.
std::vector<double> ConditioningVector(const TabularPolicy& opponent);
std::vector<double> LearnerConditioningVector();

// Pairs learner `focal` (always the first seat) with another learner or a
// freshly sampled tabular policy. With a single learner the learner seat is
// filled by the same agent (self-play). Conditioning vectors are filled in
// under the opponent-ID ablation.
Matchup SampleMatchup(const PoolConfig& cfg, int focal, RandomStream& rng);

bool IsLearnerMatch(const Matchup& m);

// One CSV line describing the pairing: kind and tabular parameters.
std::string DescribeMatchup(const Matchup& m);

// Prepends a conditioning step (row b reads z[b]) ahead of the first real
// token. Null entries fall back to the zero vector.
nn::TokenBatch InjectConditioning(nn::TokenBatch tokens, const std::vector<const double*>& z);

// Initial dataset for the no-tabular ablation: both agents act uniformly at
// random every round; both perspectives are stored with phase 0.
TrajectoryDataset NoTabularPretrainSource(int n, const EpisodeConfig& cfg, RandomStream& rng);

}  // namespace ipd

#endif  // IPD_POPULATION_H_
