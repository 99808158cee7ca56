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

#ifndef IPD_TABULAR_H_
#define IPD_TABULAR_H_

#include <array>
#include <string>
#include <vector>

#include "ipd/game.h"
#include "ipd/rng.h"

namespace ipd {

// Memory-1 strategy: probability of cooperating after each own-perspective
// observation, indexed by Observation (Start, CC, CD, DC, DD).
struct TabularPolicy {
  std::array<double, kNumObservations> coop{};

  double operator[](Observation o) const { return coop[static_cast<int>(o)]; }
  bool operator==(const TabularPolicy&) const = default;
};

void Validate(const TabularPolicy& p);

TabularPolicy SampleUniformTabular(RandomStream& rng);

Action Act(const TabularPolicy& p, Observation o, RandomStream& rng);

// One of "AllC", "AllD", "TFT", "Random50". Throws ConfigError otherwise.
TabularPolicy NamedTabular(const std::string& name);
const std::vector<std::string>& NamedTabularStrategies();

class TabularEpisodePolicy : public EpisodePolicy {
 public:
  explicit TabularEpisodePolicy(TabularPolicy p) : policy_(p) {}
  ActionDist Distribution(const Trajectory&, Observation current, RandomStream&) override {
    double c = policy_[current];
    return {c, 1.0 - c};
  }

 private:
  TabularPolicy policy_;
};

struct BestResponseResult {
  TabularPolicy br_policy;  // entries are 0 or 1
  double br_value = 0.0;    // responder's expected discounted return
  double opp_value = 0.0;   // opponent's expected discounted return
};

// Expected discounted returns (responder, opponent) of two memory-1
// policies over `cfg.horizon` rounds, by backward induction.
std::pair<double, double> ExactMemoryOneValues(const TabularPolicy& responder,
                                               const TabularPolicy& opponent,
                                               const EpisodeConfig& cfg, double gamma);

// Best deterministic memory-1 reply to `opponent`, found by evaluating all
// 32 candidates exactly. Ties go to the lexicographically smallest vector.
BestResponseResult BestResponse(const TabularPolicy& opponent, const EpisodeConfig& cfg,
                                double gamma);

}  // namespace ipd

#endif  // IPD_TABULAR_H_
