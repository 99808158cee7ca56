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

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ipd/error.h"
#include "ipd/game.h"
#include "ipd/rng.h"
#include "ipd/tabular.h"

namespace ipd {
namespace {

Trajectory Play(const TabularPolicy& a, const TabularPolicy& b, int horizon, std::uint64_t seed,
                Trajectory* other = nullptr) {
  EpisodeConfig cfg;
  cfg.horizon = horizon;
  TabularEpisodePolicy pa(a), pb(b);
  RandomStream rng(seed);
  auto [t1, t2] = PlayEpisode(pa, pb, cfg, rng);
  if (other) *other = t2;
  return t1;
}

// Responder return of a deterministic memory-1 pair by direct simulation.
double Simulate(const TabularPolicy& mine, const TabularPolicy& theirs, int horizon) {
  PayoffMatrix m;
  Observation o1 = Observation::kStart, o2 = Observation::kStart;
  double total = 0.0;
  for (int t = 0; t < horizon; ++t) {
    Action a = mine[o1] > 0.5 ? Action::kCooperate : Action::kDefect;
    Action b = theirs[o2] > 0.5 ? Action::kCooperate : Action::kDefect;
    total += m(a, b);
    o1 = EncodeObservation(a, b);
    o2 = EncodeObservation(b, a);
  }
  return total;
}

TabularPolicy FromBits(int bits) {
  TabularPolicy p;
  for (int k = 0; k < kNumObservations; ++k) p.coop[k] = (bits >> (4 - k)) & 1;
  return p;
}

}  // namespace

TEST_CASE("payoff table") {
  PayoffMatrix m;
  using A = Action;
  CHECK(Payoff(A::kCooperate, A::kCooperate, m) == std::pair(1.0, 1.0));
  CHECK(Payoff(A::kCooperate, A::kDefect, m) == std::pair(-1.0, 2.0));
  CHECK(Payoff(A::kDefect, A::kCooperate, m) == std::pair(2.0, -1.0));
  CHECK(Payoff(A::kDefect, A::kDefect, m) == std::pair(0.0, 0.0));
}

TEST_CASE("step applies the perspective rule") {
  PayoffMatrix m;
  auto s = Step(Action::kCooperate, Action::kDefect, m);
  CHECK(s.o1 == Observation::kCD);
  CHECK(s.o2 == Observation::kDC);
  CHECK(s.r1 == -1.0);
  CHECK(s.r2 == 2.0);
  s = Step(Action::kCooperate, Action::kCooperate, m);
  CHECK((s.o1 == Observation::kCC && s.o2 == Observation::kCC && s.r1 == 1 && s.r2 == 1));
  s = Step(Action::kDefect, Action::kDefect, m);
  CHECK((s.o1 == Observation::kDD && s.o2 == Observation::kDD && s.r1 == 0 && s.r2 == 0));
  for (int o = 0; o < kNumObservations; ++o) {
    auto obs = static_cast<Observation>(o);
    CHECK(SwapPerspective(SwapPerspective(obs)) == obs);
  }
}

TEST_CASE("deterministic episodes") {
  Trajectory other;
  Trajectory t = Play(NamedTabular("AllC"), NamedTabular("AllC"), 100, 1, &other);
  CHECK(t.Return() == 100.0);
  CHECK(other.Return() == 100.0);
  t = Play(NamedTabular("AllD"), NamedTabular("AllC"), 100, 1, &other);
  CHECK(t.Return() == 200.0);
  CHECK(other.Return() == -100.0);
  t = Play(NamedTabular("TFT"), NamedTabular("AllD"), 100, 1, &other);
  CHECK(t.Return() == -1.0);
  CHECK(other.Return() == 2.0);
  CHECK(t.steps[0].observation == Observation::kStart);
  CHECK(t.steps[1].observation == Observation::kCD);
  CheckTrajectory(t, 100);
}

TEST_CASE("trajectories are internally consistent and round-trip through JSON") {
  RandomStream rng(3);
  for (int i = 0; i < 20; ++i) {
    Trajectory t = Play(SampleUniformTabular(rng), SampleUniformTabular(rng), 12, i);
    CheckTrajectory(t, 12);
    Trajectory back = TrajectoryFromJson(TrajectoryToJson(t));
    REQUIRE(back.size() == t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
      CHECK(back.steps[k].observation == t.steps[k].observation);
      CHECK(back.steps[k].action == t.steps[k].action);
      CHECK(back.steps[k].reward == t.steps[k].reward);
    }
  }
  CHECK_THROWS_AS(TrajectoryFromJson("{\"steps\": [1,2"), Error);
}

TEST_CASE("uniform tabular sampling") {
  RandomStream a(17), b(17);
  CHECK(SampleUniformTabular(a) == SampleUniformTabular(b));
  RandomStream rng(5);
  std::array<double, 5> sum{}, lo, hi;
  lo.fill(1.0);
  hi.fill(0.0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    TabularPolicy p = SampleUniformTabular(rng);
    for (int k = 0; k < 5; ++k) {
      sum[k] += p.coop[k];
      lo[k] = std::min(lo[k], p.coop[k]);
      hi[k] = std::max(hi[k], p.coop[k]);
    }
  }
  for (int k = 0; k < 5; ++k) {
    CHECK(sum[k] / n >= 0.48);
    CHECK(sum[k] / n <= 0.52);
    CHECK(lo[k] <= 0.01);
    CHECK(hi[k] >= 0.99);
  }
}

TEST_CASE("act and named strategies") {
  RandomStream rng(9);
  for (int o = 0; o < kNumObservations; ++o) {
    auto obs = static_cast<Observation>(o);
    CHECK(Act(NamedTabular("AllC"), obs, rng) == Action::kCooperate);
    CHECK(Act(NamedTabular("AllD"), obs, rng) == Action::kDefect);
  }
  CHECK(Act(NamedTabular("TFT"), Observation::kCD, rng) == Action::kDefect);
  CHECK(NamedTabular("TFT").coop == std::array<double, 5>{1, 1, 0, 1, 0});
  CHECK(NamedTabular("AllC").coop == std::array<double, 5>{1, 1, 1, 1, 1});
  CHECK(NamedTabular("Random50").coop == std::array<double, 5>{.5, .5, .5, .5, .5});
  CHECK_THROWS_AS(NamedTabular("Pavlov2"), ConfigError);

  // Empirical frequency within 4 binomial standard deviations.
  TabularPolicy p;
  p.coop = {0.3, 0.3, 0.3, 0.3, 0.3};
  const int n = 10000;
  int c = 0;
  for (int i = 0; i < n; ++i) c += Act(p, Observation::kDD, rng) == Action::kCooperate;
  CHECK(std::abs(c - 0.3 * n) <= 4 * std::sqrt(n * 0.3 * 0.7));
}

TEST_CASE("best response closed forms") {
  EpisodeConfig cfg;
  cfg.horizon = 100;
  auto allc = BestResponse(NamedTabular("AllC"), cfg, 1.0);
  CHECK(allc.br_value == 200.0);
  CHECK(allc.br_policy == NamedTabular("AllD"));
  CHECK(BestResponse(NamedTabular("AllD"), cfg, 1.0).br_value == 0.0);
  auto tft = BestResponse(NamedTabular("TFT"), cfg, 1.0);
  CHECK(tft.br_value == 100.0);
  CHECK(ExactMemoryOneValues(NamedTabular("AllD"), NamedTabular("TFT"), cfg, 1.0).first == 2.0);
  CHECK_THROWS_AS(BestResponse(NamedTabular("TFT"), cfg, 0.0), ContractError);
}

TEST_CASE("best response matches brute-force simulation for every deterministic opponent") {
  EpisodeConfig cfg;
  cfg.horizon = 20;
  for (int ob = 0; ob < 32; ++ob) {
    const TabularPolicy opp = FromBits(ob);
    double brute = -1e9;
    for (int rb = 0; rb < 32; ++rb) brute = std::max(brute, Simulate(FromBits(rb), opp, 20));
    auto br = BestResponse(opp, cfg, 1.0);
    CHECK(br.br_value == brute);
    CHECK(Simulate(br.br_policy, opp, 20) == br.br_value);
  }
}

TEST_CASE("best response dominates random memory-1 policies") {
  EpisodeConfig cfg;
  cfg.horizon = 16;
  RandomStream rng(21);
  const TabularPolicy opp = SampleUniformTabular(rng);
  const double br = BestResponse(opp, cfg, 1.0).br_value;
  for (int i = 0; i < 1000; ++i) {
    const TabularPolicy p = SampleUniformTabular(rng);
    CHECK(ExactMemoryOneValues(p, opp, cfg, 1.0).first <= br + 1e-9);
  }
  // Exact values agree with Monte Carlo play (3 standard errors).
  const TabularPolicy p = SampleUniformTabular(rng);
  const double exact = ExactMemoryOneValues(p, opp, cfg, 1.0).first;
  const int n = 4000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = Play(p, opp, 16, 1000 + i).Return();
    s += r;
    ss += r * r;
  }
  const double mean = s / n, se = std::sqrt((ss / n - mean * mean) / n);
  CHECK(std::abs(mean - exact) <= 3 * se);
}

}  // namespace ipd
