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

#include "gradcheck.h"
#include "ipd/a2c.h"
#include "ipd/error.h"
#include "ipd/tabular.h"

namespace ipd {
namespace {

A2cHyper Plain() {
  A2cHyper h;
  h.gamma = 1.0;
  h.gae_lambda = 1.0;
  h.td_lambda = 1.0;
  h.reward_rescaling = 1.0;
  h.advantages_normalization = false;
  return h;
}

}  // namespace

TEST_CASE("policy and value") {
  nn::ModelParams zero(nn::ModelArch{6, 3, 0});
  Trajectory h;
  auto out = PolicyValue(zero, h, Observation::kStart);
  CHECK(out.dist[0] == 0.5);
  CHECK(out.dist[1] == 0.5);
  RandomStream rng(1);
  auto p = testing::RandomTinyModel(false, rng);
  h.steps.push_back({Observation::kStart, 0.0, Action::kCooperate});
  h.steps.push_back({Observation::kCD, -1.0, Action::kDefect});
  auto a = PolicyValue(p, h, Observation::kDC);
  auto b = PolicyValue(p, h, Observation::kDC);
  CHECK(std::abs(a.dist[0] + a.dist[1] - 1.0) <= 1e-12);
  CHECK(a.dist == b.dist);
  CHECK(a.value == b.value);
}

TEST_CASE("advantages") {
  const std::vector<double> r{0.5, -1.0, 2.0, 1.0};
  const std::vector<double> v{0.3, 0.1, -0.4, 0.8};
  // Monte-Carlo advantage at lambda = 1.
  auto mc = ComputeAdvantages(r, v, 0.0, Plain());
  double tail = 0.0;
  for (int t = 3; t >= 0; --t) {
    tail += r[t];
    CHECK(std::abs(mc.advantages[t] - (tail - v[t])) <= 1e-10);
    CHECK(std::abs(mc.targets[t] - tail) <= 1e-10);
  }
  // One-step TD error at lambda = 0.
  A2cHyper h = Plain();
  h.gae_lambda = 0.0;
  h.gamma = 0.9;
  auto td = ComputeAdvantages(r, v, 0.0, h);
  for (int t = 0; t < 4; ++t) {
    const double next = t + 1 < 4 ? v[t + 1] : 0.0;
    CHECK(td.advantages[t] == doctest::Approx(r[t] + 0.9 * next - v[t]).epsilon(1e-14));
  }
  // Constant rewards with zero values.
  auto c = ComputeAdvantages(std::vector<double>{1.5, 1.5, 1.5}, std::vector<double>{0, 0, 0}, 0.0,
                             Plain());
  CHECK(c.advantages == std::vector<double>{4.5, 3.0, 1.5});

  // Normalization gives zero mean and unit population std.
  std::vector<Advantages> batch{mc, td};
  NormalizeAdvantages(batch);
  double s = 0, ss = 0;
  for (const auto& a : batch) {
    for (double x : a.advantages) s += x, ss += x * x;
  }
  CHECK(std::abs(s / 8) <= 1e-12);
  CHECK(ss / 8 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("A2C loss") {
  RandomStream rng(2);
  auto trajs = testing::RandomTrajectories(2, 5, false, rng);
  std::vector<const Trajectory*> batch{&trajs[0], &trajs[1]};
  nn::ModelParams zero(nn::ModelArch{6, 3, 0});
  A2cHyper h;
  h.value_coefficient = 0.0;
  h.entropy_reg = 0.01;
  std::vector<Advantages> adv(2, Advantages{std::vector<double>(5, 0.0), std::vector<double>(5, 0.3)});
  auto parts = A2cLoss(zero, batch, adv, h);
  CHECK(parts.total == doctest::Approx(-0.01 * 5 * std::log(2.0)).epsilon(1e-12));
  CHECK(parts.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // Perfect value fit.
  h.value_coefficient = 0.5;
  std::vector<Advantages> fit(2, Advantages{std::vector<double>(5, 0.0), std::vector<double>(5, 0.0)});
  CHECK(A2cLoss(zero, batch, fit, h).value == 0.0);

  for (int i = 0; i < 6; ++i) {
    auto r = testing::A2cLossCheck(rng);
    INFO(r.worst);
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("A2C iteration") {
  nn::ModelArch arch{8, 4, 0};
  EpisodeConfig ecfg;
  ecfg.horizon = 6;
  MetricsContext ctx{"t", "a2c", 1};
  A2cCollector collect = [&](int, std::span<const A2cAgent* const> ls, RandomStream& rng,
                             std::vector<MetricsRow>&) {
    std::vector<std::vector<Trajectory>> out(1);
    TabularEpisodePolicy opp(NamedTabular("TFT"));
    for (int e = 0; e < 16; ++e) {
      SessionPolicy me(*ls[0], ecfg);
      out[0].push_back(PlayEpisode(me, opp, ecfg, rng).first);
    }
    return out;
  };
  auto run = [&](double lr, std::vector<MetricsRow>* rows) {
    RandomStream init(3);
    std::vector<A2cLearner> ls{InitA2cLearner(arch, init)};
    A2cHyper h = A2cPreset(1);
    h.learning_rate = lr;
    for (int it = 0; it < 2; ++it) {
      RandomStream rng = RandomStream(4).Derive(it);
      auto r = A2cTrainIteration(ls, it, collect, h, rng, ctx);
      if (rows) rows->insert(rows->end(), r.begin(), r.end());
    }
    return ls[0].params;
  };
  std::vector<MetricsRow> rows;
  auto a = run(0.005, &rows);
  auto b = run(0.005, nullptr);
  CHECK(a.data() == b.data());
  RandomStream init(3);
  auto fresh = InitA2cLearner(arch, init).params;
  std::vector<MetricsRow> frozen_rows;
  CHECK(run(0.0, &frozen_rows).data() == fresh.data());
  CHECK(!frozen_rows.empty());
  for (const auto& r : rows) {
    if (r.metric == "entropy_learner0" && r.outer == 0) {
      CHECK(std::abs(r.value - std::log(2.0)) <= 0.01);
    }
  }
}

TEST_CASE("presets") {
  CHECK(A2cPreset(1).batch_size == 2048);
  CHECK(A2cPreset(2).advantages_normalization == false);
  CHECK(A2cPreset(3).learning_rate == 0.0005);
  CHECK(A2cPreset(4).entropy_reg == 0.01);
  CHECK_THROWS_AS(A2cPreset(5), ConfigError);
}

}  // namespace ipd
