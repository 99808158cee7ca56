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

#include "ipd/agent.h"

#include <cmath>

#include "ipd/error.h"

namespace ipd {

SessionPolicy::SessionPolicy(const Agent& agent, const EpisodeConfig& cfg,
                             const std::vector<double>* conditioning) {
  const std::vector<double>* rows[1] = {conditioning};
  session_ = agent.NewSession(rows, cfg);
}

ActionDist SessionPolicy::Distribution(const Trajectory& history, Observation current,
                                       RandomStream& rng) {
  const Trajectory* h[1] = {&history};
  Observation o[1] = {current};
  RandomStream* r[1] = {&rng};
  ActionDist out[1];
  session_->Act(h, o, r, out);
  return out[0];
}

namespace {

void CheckDist(const ActionDist& d, std::size_t episode, int round) {
  bool ok = std::isfinite(d[0]) && std::isfinite(d[1]) && d[0] >= -1e-12 &&
            d[1] >= -1e-12 && std::abs(d[0] + d[1] - 1.0) <= 1e-6;
  if (!ok) {
    throw ContractError("non-normalized action distribution in episode " +
                        std::to_string(episode) + " round " + std::to_string(round));
  }
}

struct SeatRef {
  std::size_t episode;
  int side;
};

}  // namespace

std::vector<std::pair<Trajectory, Trajectory>> PlayLockstep(
    std::span<const Matchup> matchups, std::span<const Agent* const> agents,
    const EpisodeConfig& cfg, std::span<RandomStream> rngs) {
  Validate(cfg);
  const std::size_t n = matchups.size();
  if (rngs.size() != n) throw ContractError("PlayLockstep: one random stream per episode");

  std::vector<std::pair<Trajectory, Trajectory>> out(n);
  std::vector<std::array<Observation, 2>> obs(n, {Observation::kStart, Observation::kStart});
  std::vector<std::array<ActionDist, 2>> dist(n);

  auto seat_of = [&](std::size_t e, int side) -> const Seat& {
    return side == 0 ? matchups[e].first : matchups[e].second;
  };
  auto traj_of = [&](std::size_t e, int side) -> Trajectory& {
    return side == 0 ? out[e].first : out[e].second;
  };

  // Group seats by agent.
  std::vector<std::vector<SeatRef>> rows(agents.size());
  for (std::size_t e = 0; e < n; ++e) {
    out[e].first.agent_index = 0;
    out[e].second.agent_index = 1;
    out[e].first.steps.reserve(cfg.horizon);
    out[e].second.steps.reserve(cfg.horizon);
    for (int side = 0; side < 2; ++side) {
      const Seat& s = seat_of(e, side);
      if (s.agent >= 0) {
        if (s.agent >= static_cast<int>(agents.size()) || agents[s.agent] == nullptr) {
          throw ContractError("matchup refers to a missing agent");
        }
        rows[s.agent].push_back({e, side});
        traj_of(e, side).conditioning = s.conditioning;
      } else {
        Validate(s.tabular);
      }
    }
  }

  std::vector<std::unique_ptr<BatchSession>> sessions(agents.size());
  for (std::size_t k = 0; k < agents.size(); ++k) {
    if (rows[k].empty()) continue;
    std::vector<const std::vector<double>*> cond;
    cond.reserve(rows[k].size());
    for (const SeatRef& r : rows[k]) {
      const Seat& s = seat_of(r.episode, r.side);
      cond.push_back(s.conditioning.empty() ? nullptr : &s.conditioning);
    }
    sessions[k] = agents[k]->NewSession(cond, cfg);
  }

  std::vector<const Trajectory*> hist;
  std::vector<Observation> cur;
  std::vector<RandomStream*> rng_ptrs;
  std::vector<ActionDist> d;
  for (int round = 0; round < cfg.horizon; ++round) {
    for (std::size_t k = 0; k < agents.size(); ++k) {
      if (!sessions[k]) continue;
      const auto& rk = rows[k];
      hist.resize(rk.size());
      cur.resize(rk.size());
      rng_ptrs.resize(rk.size());
      d.resize(rk.size());
      for (std::size_t i = 0; i < rk.size(); ++i) {
        hist[i] = &traj_of(rk[i].episode, rk[i].side);
        cur[i] = obs[rk[i].episode][rk[i].side];
        rng_ptrs[i] = &rngs[rk[i].episode];
      }
      sessions[k]->Act(hist, cur, rng_ptrs, d);
      for (std::size_t i = 0; i < rk.size(); ++i) dist[rk[i].episode][rk[i].side] = d[i];
    }
    for (std::size_t e = 0; e < n; ++e) {
      for (int side = 0; side < 2; ++side) {
        const Seat& s = seat_of(e, side);
        if (s.agent < 0) {
          double c = s.tabular[obs[e][side]];
          dist[e][side] = {c, 1.0 - c};
        }
        CheckDist(dist[e][side], e, round);
      }
      Action a0 = SampleAction(dist[e][0], rngs[e]);
      Action a1 = SampleAction(dist[e][1], rngs[e]);
      StepOutcome o = Step(a0, a1, cfg.payoff);
      out[e].first.steps.push_back({obs[e][0], o.r1, a0});
      out[e].second.steps.push_back({obs[e][1], o.r2, a1});
      obs[e] = {o.o1, o.o2};
    }
  }
  return out;
}

}  // namespace ipd
