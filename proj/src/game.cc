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

#include "ipd/game.h"

#include <cmath>
#include <istream>
#include <ostream>

#include "ipd/error.h"
#include "json.hpp"

namespace ipd {

Observation EncodeObservation(Action own, Action other) {
  return static_cast<Observation>(1 + 2 * static_cast<int>(own) +
                                  static_cast<int>(other));
}

std::pair<Action, Action> DecodeObservation(Observation o) {
  if (o == Observation::kStart) {
    throw ContractError("DecodeObservation: Start carries no joint action");
  }
  int k = static_cast<int>(o) - 1;
  return {static_cast<Action>(k / 2), static_cast<Action>(k % 2)};
}

Observation SwapPerspective(Observation o) {
  switch (o) {
    case Observation::kCD:
      return Observation::kDC;
    case Observation::kDC:
      return Observation::kCD;
    default:
      return o;
  }
}

const char* ActionName(Action a) { return a == Action::kCooperate ? "C" : "D"; }

const char* ObservationName(Observation o) {
  static const char* kNames[] = {"Start", "CC", "CD", "DC", "DD"};
  return kNames[static_cast<int>(o)];
}

std::pair<double, double> Payoff(Action a1, Action a2, const PayoffMatrix& m) {
  return {m(a1, a2), m(a2, a1)};
}

StepOutcome Step(Action a1, Action a2, const PayoffMatrix& m) {
  auto [r1, r2] = Payoff(a1, a2, m);
  return {EncodeObservation(a1, a2), EncodeObservation(a2, a1), r1, r2};
}

void Validate(const EpisodeConfig& cfg) {
  if (cfg.horizon < 1) throw ConfigError("episode.horizon must be >= 1");
}

double Trajectory::Return() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward;
  return total;
}

void CheckTrajectory(const Trajectory& t, int horizon) {
  if (horizon >= 0 && static_cast<int>(t.steps.size()) != horizon) {
    throw ContractError("trajectory length " + std::to_string(t.steps.size()) +
                        " != horizon " + std::to_string(horizon));
  }
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    Observation o = t.steps[i].observation;
    if (i == 0) {
      if (o != Observation::kStart) throw ContractError("trajectory must begin at Start");
      continue;
    }
    if (o == Observation::kStart) {
      throw ContractError("Start observation after step 0 at step " + std::to_string(i));
    }
    if (DecodeObservation(o).first != t.steps[i - 1].action) {
      throw ContractError("observation inconsistent with own action at step " +
                          std::to_string(i));
    }
  }
}

Action SampleAction(const ActionDist& d, RandomStream& rng) {
  return rng.Uniform() < d[0] ? Action::kCooperate : Action::kDefect;
}

namespace {

void CheckDistribution(const ActionDist& d, int agent, int round) {
  bool ok = std::isfinite(d[0]) && std::isfinite(d[1]) && d[0] >= -1e-12 &&
            d[1] >= -1e-12 && std::abs(d[0] + d[1] - 1.0) <= 1e-6;
  if (!ok) {
    throw ContractError("policy " + std::to_string(agent) +
                        " returned a non-normalized distribution at round " +
                        std::to_string(round));
  }
}

}  // namespace

std::pair<Trajectory, Trajectory> PlayEpisode(EpisodePolicy& policy1,
                                              EpisodePolicy& policy2,
                                              const EpisodeConfig& cfg,
                                              RandomStream& rng) {
  Validate(cfg);
  Trajectory t1, t2;
  t1.agent_index = 0;
  t2.agent_index = 1;
  t1.steps.reserve(cfg.horizon);
  t2.steps.reserve(cfg.horizon);
  Observation o1 = Observation::kStart;
  Observation o2 = Observation::kStart;
  for (int round = 0; round < cfg.horizon; ++round) {
    ActionDist d1 = policy1.Distribution(t1, o1, rng);
    ActionDist d2 = policy2.Distribution(t2, o2, rng);
    CheckDistribution(d1, 0, round);
    CheckDistribution(d2, 1, round);
    Action a1 = SampleAction(d1, rng);
    Action a2 = SampleAction(d2, rng);
    StepOutcome out = Step(a1, a2, cfg.payoff);
    t1.steps.push_back({o1, out.r1, a1});
    t2.steps.push_back({o2, out.r2, a2});
    o1 = out.o1;
    o2 = out.o2;
  }
  return {std::move(t1), std::move(t2)};
}

std::string TrajectoryToJson(const Trajectory& t) {
  nlohmann::json j;
  j["agent_index"] = t.agent_index;
  std::vector<int> obs, act;
  std::vector<double> rew;
  obs.reserve(t.steps.size());
  act.reserve(t.steps.size());
  rew.reserve(t.steps.size());
  for (const auto& s : t.steps) {
    obs.push_back(static_cast<int>(s.observation));
    act.push_back(static_cast<int>(s.action));
    rew.push_back(s.reward);
  }
  j["observations"] = obs;
  j["actions"] = act;
  j["rewards"] = rew;
  if (t.phase >= 0) j["phase"] = t.phase;
  if (!t.conditioning.empty()) j["conditioning"] = t.conditioning;
  return j.dump();
}

Trajectory TrajectoryFromJson(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptError(std::string("trajectory record: ") + e.what());
  }
  Trajectory t;
  try {
    t.agent_index = j.at("agent_index").get<int>();
    auto obs = j.at("observations").get<std::vector<int>>();
    auto act = j.at("actions").get<std::vector<int>>();
    auto rew = j.at("rewards").get<std::vector<double>>();
    if (obs.size() != act.size() || obs.size() != rew.size()) {
      throw CorruptError("trajectory record: field lengths differ");
    }
    t.steps.reserve(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (obs[i] < 0 || obs[i] >= kNumObservations || act[i] < 0 || act[i] >= kNumActions) {
        throw CorruptError("trajectory record: code out of range");
      }
      t.steps.push_back({static_cast<Observation>(obs[i]), rew[i], static_cast<Action>(act[i])});
    }
    if (j.contains("phase")) t.phase = j["phase"].get<int>();
    if (j.contains("conditioning")) t.conditioning = j["conditioning"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptError(std::string("trajectory record: ") + e.what());
  }
  return t;
}

void WriteTrajectories(std::ostream& out, const std::vector<Trajectory>& ts) {
  for (const auto& t : ts) out << TrajectoryToJson(t) << '\n';
  if (!out) throw IoError("failed writing trajectories");
}

std::vector<Trajectory> ReadTrajectories(std::istream& in) {
  std::vector<Trajectory> ts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ts.push_back(TrajectoryFromJson(line));
  }
  return ts;
}

}  // namespace ipd
