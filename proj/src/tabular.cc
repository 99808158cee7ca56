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

#include "ipd/tabular.h"

#include "ipd/error.h"

namespace ipd {

void Validate(const TabularPolicy& p) {
  for (double c : p.coop) {
    if (!(c >= 0.0 && c <= 1.0)) throw ContractError("tabular probability outside [0,1]");
  }
}

TabularPolicy SampleUniformTabular(RandomStream& rng) {
  TabularPolicy p;
  for (double& c : p.coop) c = rng.Uniform();
  return p;
}

Action Act(const TabularPolicy& p, Observation o, RandomStream& rng) {
  return rng.Uniform() < p[o] ? Action::kCooperate : Action::kDefect;
}

const std::vector<std::string>& NamedTabularStrategies() {
  static const std::vector<std::string> kNames = {"AllC", "AllD", "TFT", "Random50"};
  return kNames;
}

TabularPolicy NamedTabular(const std::string& name) {
  if (name == "AllC") return {{1, 1, 1, 1, 1}};
  if (name == "AllD") return {{0, 0, 0, 0, 0}};
  // Own-perspective codes: CD and DD mean the opponent defected last round.
  if (name == "TFT") return {{1, 1, 0, 1, 0}};
  if (name == "Random50") return {{0.5, 0.5, 0.5, 0.5, 0.5}};
  throw ConfigError("unknown tabular strategy '" + name + "'");
}

std::pair<double, double> ExactMemoryOneValues(const TabularPolicy& responder,
                                               const TabularPolicy& opponent,
                                               const EpisodeConfig& cfg, double gamma) {
  // value[s] holds the expected return-to-go from responder state s.
  std::array<double, kNumObservations> mine{}, theirs{};
  for (int t = cfg.horizon - 1; t >= 0; --t) {
    std::array<double, kNumObservations> next_mine{}, next_theirs{};
    for (int s = 0; s < kNumObservations; ++s) {
      auto obs = static_cast<Observation>(s);
      double pa = responder[obs];
      double pb = opponent[SwapPerspective(obs)];
      double vm = 0.0, vt = 0.0;
      for (int a = 0; a < 2; ++a) {
        double wa = a == 0 ? pa : 1.0 - pa;
        if (wa == 0.0) continue;
        for (int b = 0; b < 2; ++b) {
          double wb = b == 0 ? pb : 1.0 - pb;
          if (wb == 0.0) continue;
          auto act_a = static_cast<Action>(a);
          auto act_b = static_cast<Action>(b);
          int ns = static_cast<int>(EncodeObservation(act_a, act_b));
          vm += wa * wb * (cfg.payoff(act_a, act_b) + gamma * mine[ns]);
          vt += wa * wb * (cfg.payoff(act_b, act_a) + gamma * theirs[ns]);
        }
      }
      next_mine[s] = vm;
      next_theirs[s] = vt;
    }
    mine = next_mine;
    theirs = next_theirs;
  }
  return {mine[0], theirs[0]};
}

BestResponseResult BestResponse(const TabularPolicy& opponent, const EpisodeConfig& cfg,
                                double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractError("gamma must lie in (0,1]");
  Validate(opponent);
  Validate(cfg);
  BestResponseResult best;
  bool have = false;
  // Bit 4 is p_start, bit 0 is p_dd, so counting up walks the vectors in
  // lexicographic order.
  for (int bits = 0; bits < 32; ++bits) {
    TabularPolicy cand;
    for (int k = 0; k < kNumObservations; ++k) cand.coop[k] = (bits >> (4 - k)) & 1;
    auto [v, w] = ExactMemoryOneValues(cand, opponent, cfg, gamma);
    if (!have || v > best.br_value + 1e-9) {
      best = {cand, v, w};
      have = true;
    }
  }
  return best;
}

}  // namespace ipd
