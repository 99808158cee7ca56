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

// Two-player iterated prisoner's dilemma as a finite-horizon partially
// observable game. Each agent observes the previous round's joint action
// with its own action listed first.

#ifndef IPD_GAME_H_
#define IPD_GAME_H_

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ipd/rng.h"

namespace ipd {

enum class Action : int { kCooperate = 0, kDefect = 1 };
inline constexpr int kNumActions = 2;

enum class Observation : int { kStart = 0, kCC = 1, kCD = 2, kDC = 3, kDD = 4 };
inline constexpr int kNumObservations = 5;

// Observation seen by the agent that played `own` against `other`.
Observation EncodeObservation(Action own, Action other);

// Inverse of EncodeObservation. Throws ContractError for kStart.
std::pair<Action, Action> DecodeObservation(Observation o);

// The same round seen from the other player: CD <-> DC.
Observation SwapPerspective(Observation o);

const char* ActionName(Action a);
const char* ObservationName(Observation o);

struct PayoffMatrix {
  // reward[own][other]
  std::array<std::array<double, 2>, 2> reward = {{{1.0, -1.0}, {2.0, 0.0}}};

  double operator()(Action own, Action other) const {
    return reward[static_cast<int>(own)][static_cast<int>(other)];
  }
};

std::pair<double, double> Payoff(Action a1, Action a2, const PayoffMatrix& m);

struct StepOutcome {
  Observation o1;
  Observation o2;
  double r1;
  double r2;
};

StepOutcome Step(Action a1, Action a2, const PayoffMatrix& m);

struct EpisodeConfig {
  int horizon = 100;
  PayoffMatrix payoff;
};

void Validate(const EpisodeConfig& cfg);

// One round from one agent's perspective: the observation it acted on, the
// action it took and the reward that action earned.
struct TrajectoryStep {
  Observation observation;
  double reward;
  Action action;
};

struct Trajectory {
  int agent_index = 0;
  std::vector<TrajectoryStep> steps;
  // Opponent conditioning vector; empty unless the opponent-ID ablation is on.
  std::vector<double> conditioning;
  // Phase of origin when stored in a dataset, -1 otherwise.
  int phase = -1;

  std::size_t size() const { return steps.size(); }
  double Return() const;
};

// Throws ContractError if `t` violates the perspective rule or starts
// anywhere but kStart. `horizon` < 0 skips the length check.
void CheckTrajectory(const Trajectory& t, int horizon = -1);

// Probabilities (P(C), P(D)).
using ActionDist = std::array<double, 2>;

// Per-episode policy. May keep state across calls within one episode; a
// fresh instance is used for every episode.
class EpisodePolicy {
 public:
  virtual ~EpisodePolicy() = default;
  // `history` holds the completed rounds of this agent; `current` is the
  // observation for the round about to be played.
  virtual ActionDist Distribution(const Trajectory& history, Observation current,
                                  RandomStream& rng) = 0;
};

Action SampleAction(const ActionDist& d, RandomStream& rng);

// Runs exactly cfg.horizon rounds. Throws ContractError if a policy returns
// a distribution that is negative or does not sum to one within 1e-6.
std::pair<Trajectory, Trajectory> PlayEpisode(EpisodePolicy& policy1,
                                              EpisodePolicy& policy2,
                                              const EpisodeConfig& cfg,
                                              RandomStream& rng);

// Line-delimited JSON trajectory records.
std::string TrajectoryToJson(const Trajectory& t);
Trajectory TrajectoryFromJson(const std::string& line);
void WriteTrajectories(std::ostream& out, const std::vector<Trajectory>& ts);
std::vector<Trajectory> ReadTrajectories(std::istream& in);

}  // namespace ipd

#endif  // IPD_GAME_H_
