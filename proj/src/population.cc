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

#include "ipd/population.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ipd/error.h"

namespace ipd {

Ablation ParseAblation(const std::string& s) {
  if (s == "none") return Ablation::kNone;
  if (s == "opponent_id") return Ablation::kOpponentId;
  if (s == "no_tabular") return Ablation::kNoTabular;
  throw ConfigError("unknown ablation '" + s + "' (expected none, opponent_id, no_tabular)");
}

const char* AblationName(Ablation a) {
  switch (a) {
    case Ablation::kOpponentId:
      return "opponent_id";
    case Ablation::kNoTabular:
      return "no_tabular";
    default:
      return "none";
  }
}

void Validate(const PoolConfig& cfg) {
  if (!(cfg.learner_fraction >= 0.0 && cfg.learner_fraction <= 1.0)) {
    throw ConfigError("pool.learner_fraction must lie in [0,1]");
  }
  if (cfg.n_learners < 1) throw ConfigError("pool.n_learners must be >= 1");
  if (cfg.ablation == Ablation::kNoTabular && cfg.n_learners < 2) {
    throw ConfigError("no_tabular ablation needs at least two learners");
  }
}

std::vector<double> ConditioningVector(const TabularPolicy& opponent) {
  std::vector<double> z;
  z.reserve(nn::kConditioningDim);
  for (double p : opponent.coop) {
    double c = std::clamp(p, kConditioningClamp, 1.0 - kConditioningClamp);
    z.push_back(std::log(c));
    z.push_back(std::log(1.0 - c));
  }
  return z;
}

std::vector<double> LearnerConditioningVector() {
  return std::vector<double>(nn::kConditioningDim, 0.0);
}

Matchup SampleMatchup(const PoolConfig& cfg, int focal, RandomStream& rng) {
  Validate(cfg);
  if (focal < 0 || focal >= cfg.n_learners) throw ContractError("focal learner out of range");
  Matchup m;
  m.first.agent = focal;
  // Draw unconditionally so the stream advances the same way for every
  // learner_fraction.
  bool vs_learner = rng.Uniform() < cfg.learner_fraction;
  if (cfg.ablation == Ablation::kNoTabular) vs_learner = true;
  if (vs_learner) {
    if (cfg.n_learners == 1) {
      m.second.agent = focal;
    } else {
      int k = static_cast<int>(rng.Index(static_cast<std::uint64_t>(cfg.n_learners - 1)));
      m.second.agent = k >= focal ? k + 1 : k;
    }
  } else {
    m.second.agent = -1;
    m.second.tabular = SampleUniformTabular(rng);
  }
  if (cfg.ablation == Ablation::kOpponentId) {
    m.first.conditioning = vs_learner ? LearnerConditioningVector()
                                      : ConditioningVector(m.second.tabular);
    if (vs_learner) m.second.conditioning = LearnerConditioningVector();
  }
  return m;
}

bool IsLearnerMatch(const Matchup& m) { return m.first.agent >= 0 && m.second.agent >= 0; }

std::string DescribeMatchup(const Matchup& m) {
  char buf[256];
  if (m.second.agent >= 0) {
    std::snprintf(buf, sizeof(buf), "learner,%d,%d,,,,,", m.first.agent, m.second.agent);
  } else {
    const auto& c = m.second.tabular.coop;
    std::snprintf(buf, sizeof(buf), "tabular,%d,-1,%.6f,%.6f,%.6f,%.6f,%.6f", m.first.agent,
                  c[0], c[1], c[2], c[3], c[4]);
  }
  return buf;
}

nn::TokenBatch InjectConditioning(nn::TokenBatch tokens, const std::vector<const double*>& z) {
  static const std::vector<double> kZero(nn::kConditioningDim, 0.0);
  const std::size_t b = z.size();
  if (!tokens.steps.empty() && tokens.steps[0].size() != b) {
    throw ContractError("InjectConditioning: batch size mismatch");
  }
  std::vector<nn::Token> first(b);
  for (std::size_t i = 0; i < b; ++i) first[i].cond = z[i] != nullptr ? z[i] : kZero.data();
  tokens.steps.insert(tokens.steps.begin(), std::move(first));
  return tokens;
}

TrajectoryDataset NoTabularPretrainSource(int n, const EpisodeConfig& cfg, RandomStream& rng) {
  if (n < 1) throw ContractError("dataset size must be >= 1");
  TrajectoryDataset d;
  const TabularPolicy uniform = NamedTabular("Random50");
  for (int e = 0; e < n; ++e) {
    RandomStream er = rng.Derive(static_cast<std::uint64_t>(e));
    TabularEpisodePolicy p1(uniform), p2(uniform);
    auto [t1, t2] = PlayEpisode(p1, p2, cfg, er);
    d.Append(std::move(t1), 0);
    d.Append(std::move(t2), 0);
  }
  return d;
}

}  // namespace ipd
