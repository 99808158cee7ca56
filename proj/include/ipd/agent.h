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

// Learned agents play many episodes in lockstep so that one forward pass
// serves every episode they take part in.

#ifndef IPD_AGENT_H_
#define IPD_AGENT_H_

#include <memory>
#include <span>
#include <vector>

#include "ipd/game.h"
#include "ipd/rng.h"
#include "ipd/tabular.h"

namespace ipd {

// One agent's seats across a set of episodes. Rows are fixed at creation.
class BatchSession {
 public:
  virtual ~BatchSession() = default;
  // Called once per round for every row, in row order. `histories[i]` holds
  // the completed rounds of row i; `current[i]` is its observation for the
  // round about to be played. `rngs[i]` is the stream of row i's episode.
  virtual void Act(std::span<const Trajectory* const> histories,
                   std::span<const Observation> current,
                   std::span<RandomStream* const> rngs, std::span<ActionDist> out) = 0;
};

class Agent {
 public:
  virtual ~Agent() = default;
  // `conditioning[i]` points at row i's opponent vector, or is null when the
  // opponent-ID ablation is off.
  virtual std::unique_ptr<BatchSession> NewSession(
      std::span<const std::vector<double>* const> conditioning,
      const EpisodeConfig& cfg) const = 0;
};

// Adapts a one-row session to the per-episode policy interface.
class SessionPolicy : public EpisodePolicy {
 public:
  SessionPolicy(const Agent& agent, const EpisodeConfig& cfg,
                const std::vector<double>* conditioning = nullptr);
  ActionDist Distribution(const Trajectory& history, Observation current,
                          RandomStream& rng) override;

 private:
  std::unique_ptr<BatchSession> session_;
};

// A player slot: a learned agent (index into the agent list) or a tabular
// policy when agent < 0.
struct Seat {
  int agent = -1;
  TabularPolicy tabular;
  // Fed to the agent in this seat when non-empty (opponent-ID ablation).
  std::vector<double> conditioning;
};

struct Matchup {
  Seat first;
  Seat second;
};

// Plays every matchup to the horizon. Episode i draws all of its randomness
// from rngs[i], so results do not depend on how episodes are grouped.
// Returns (first seat, second seat) trajectories per episode; conditioning
// vectors are copied into the trajectories of learned seats.
std::vector<std::pair<Trajectory, Trajectory>> PlayLockstep(
    std::span<const Matchup> matchups, std::span<const Agent* const> agents,
    const EpisodeConfig& cfg, std::span<RandomStream> rngs);

}  // namespace ipd

#endif  // IPD_AGENT_H_
