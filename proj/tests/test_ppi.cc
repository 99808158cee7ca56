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
#include "handbuilt.h"
#include "ipd/error.h"
#include "ipd/experiments.h"
#include "ipd/ppi.h"
#include "ipd/tabular.h"

namespace ipd {
namespace {

PpiConfig TinyPpi() {
  PpiConfig c;
  c.arch.hidden_dim = 8;
  c.arch.embed_dim = 4;
  c.n_phases = 2;
  c.n_samples_per_phase = 20;
  c.n_pretrain_trajectories = 50;
  c.train_epochs = 2;
  c.train_batch_size = 16;
  c.rollout_depth = 3;
  c.n_rollouts_per_action = 2;
  return c;
}

std::vector<const Trajectory*> Ptrs(const std::vector<Trajectory>& ts) {
  std::vector<const Trajectory*> out;
  for (const auto& t : ts) out.push_back(&t);
  return out;
}

}  // namespace

TEST_CASE("initial dataset") {
  EpisodeConfig cfg;
  cfg.horizon = 7;
  RandomStream rng(1);
  TrajectoryDataset one = BuildPretrainDataset(1, cfg, rng);
  REQUIRE(one.size() == 2);
  CHECK(one[0].size() == 7);
  CHECK(one[1].size() == 7);
  CHECK(one.CountPhase(0) == 2);
  RandomStream r2(2);
  TrajectoryDataset d = BuildPretrainDataset(100, cfg, r2);
  CHECK(d.size() == 200);
  for (const auto& t : d.records()) CheckTrajectory(t, 7);
  // The two perspectives of an episode mirror each other.
  for (std::size_t e = 0; e < 100; ++e) {
    const auto& a = d[2 * e];
    const auto& b = d[2 * e + 1];
    for (int t = 1; t < 7; ++t) CHECK(b.steps[t].observation == SwapPerspective(a.steps[t].observation));
  }
  RandomStream r3(2);
  TrajectoryDataset c = BuildPretrainDataset(3, cfg, r3, true);
  for (const auto& t : c.records()) CHECK(t.conditioning.size() == 10);
  CHECK(PpiConfig{}.n_pretrain_trajectories == 200000);
}

TEST_CASE("sequence loss closed forms") {
  RandomStream rng(3);
  auto trajs = testing::RandomTrajectories(4, 6, false, rng);
  nn::ModelParams zero(nn::ModelArch{8, 4, 0});
  auto parts = SequenceLoss(zero, Ptrs(trajs), {});
  CHECK(parts.obs == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(parts.action == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // AllC self-play is perfectly predictable.
  EpisodeConfig cfg;
  cfg.horizon = 6;
  TabularEpisodePolicy a(NamedTabular("AllC")), b(NamedTabular("AllC"));
  RandomStream r(4);
  std::vector<Trajectory> coop{PlayEpisode(a, b, cfg, r).first};
  nn::ModelParams perfect(nn::ModelArch{8, 4, 0});
  perfect.block(nn::Block::kHeadActionB)(0, 0) = 50;
  perfect.block(nn::Block::kHeadActionB)(0, 1) = -50;
  for (int o = 0; o < 5; ++o) perfect.block(nn::Block::kHeadObsB)(0, o) = o == 1 ? 50 : -50;
  perfect.block(nn::Block::kHeadRewardB)(0, 0) = 1.0;
  parts = SequenceLoss(perfect, Ptrs(coop), {});
  CHECK(parts.obs < 1e-40);
  CHECK(parts.action < 1e-40);
  CHECK(parts.reward == 0.0);
}

TEST_CASE("sequence loss gradients, conditioned and plain") {
  RandomStream rng(5);
  for (int i = 0; i < 6; ++i) {
    auto r = testing::SequenceLossCheck(rng);
    INFO(r.worst);
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("training") {
  PpiConfig cfg = TinyPpi();
  EpisodeConfig ecfg;
  ecfg.horizon = 6;
  RandomStream rng(6);
  TrajectoryDataset d = BuildPretrainDataset(30, ecfg, rng);

  cfg.train_epochs = 0;
  RandomStream a(11);
  TrainResult fresh = TrainSequenceModel(d, cfg, a);
  RandomStream init = RandomStream(11).Derive(0);
  CHECK(fresh.params.data() == nn::InitParams(cfg.arch, init).data());

  cfg.train_epochs = 2;
  RandomStream b1(12), b2(12);
  CHECK(TrainSequenceModel(d, cfg, b1).params.data() == TrainSequenceModel(d, cfg, b2).params.data());

  // Overfitting one repeated trajectory.
  TrajectoryDataset rep;
  for (int i = 0; i < 64; ++i) rep.Append(d[0], 0);
  cfg.train_epochs = 20;
  cfg.optimizer.learning_rate = 2e-2;
  RandomStream c(13);
  TrainResult fit = TrainSequenceModel(rep, cfg, c);
  REQUIRE(fit.epoch_loss.size() == 20);
  for (std::size_t e = 1; e < fit.epoch_loss.size(); ++e) {
    CHECK(fit.epoch_loss[e] <= 1.05 * fit.epoch_loss[e - 1]);
  }
  CHECK(fit.epoch_loss.back() < 0.5 * fit.epoch_loss.front());
}

TEST_CASE("Q estimates of hand-built models") {
  PpiConfig cfg;
  cfg.rollout_depth = 15;
  cfg.n_rollouts_per_action = 4;
  Trajectory empty;
  RandomStream rng(7);
  cfg.rollout_gamma = 1.0;
  auto one = testing::ConstantRewardModel(1.0);
  CHECK(EstimateQ(one, empty, Observation::kStart, Action::kCooperate, 100, cfg, rng) ==
        doctest::Approx(15.0).epsilon(1e-12));
  cfg.rollout_gamma = 0.99;
  double geo = 0.0;
  for (int k = 0; k < 15; ++k) geo += std::pow(0.99, k);
  CHECK(std::abs(EstimateQ(one, empty, Observation::kStart, Action::kDefect, 100, cfg, rng) - geo) <=
        1e-9);
  CHECK(geo == doctest::Approx(13.994).epsilon(1e-4));
  // Rollouts stop at the end of the episode.
  cfg.rollout_gamma = 1.0;
  CHECK(EstimateQ(one, empty, Observation::kStart, Action::kDefect, 4, cfg, rng) ==
        doctest::Approx(4.0).epsilon(1e-12));
  auto zero = testing::ConstantRewardModel(0.0);
  CHECK(EstimateQ(zero, empty, Observation::kStart, Action::kCooperate, 100, cfg, rng) == 0.0);
  CHECK(EstimateQ(zero, empty, Observation::kStart, Action::kDefect, 100, cfg, rng) == 0.0);

  cfg.rollout_depth = 1;
  auto av = testing::ActionValueModel(2.0, 0.0);
  CHECK(EstimateQ(av, empty, Observation::kStart, Action::kCooperate, 10, cfg, rng) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(EstimateQ(av, empty, Observation::kStart, Action::kDefect, 10, cfg, rng) == 0.0);
}

TEST_CASE("improved policy") {
  const ActionDist prior{0.3, 0.7};
  const ActionDist same = ImprovedPolicy(prior, {5.0, -3.0}, 0.0);
  CHECK(same[0] == prior[0]);
  CHECK(same[1] == prior[1]);
  const ActionDist u = ImprovedPolicy({0.5, 0.5}, {2.0, 0.0}, 0.01);
  CHECK(u[0] == doctest::Approx(std::exp(0.02) / (std::exp(0.02) + 1.0)).epsilon(1e-14));
  CHECK(u[0] == doctest::Approx(0.50500).epsilon(1e-4));
  const ActionDist sure = ImprovedPolicy({1.0, 0.0}, {-100.0, 100.0}, 5.0);
  CHECK(sure[0] == 1.0);
  CHECK(sure[1] == 0.0);
  // Large values do not overflow.
  const ActionDist big = ImprovedPolicy({0.5, 0.5}, {1e6, 0.0}, 1.0);
  CHECK(big[0] == 1.0);

  CHECK(KlDivergence(prior, prior) == 0.0);
  const double kl = 0.505 * std::log(0.505 / 0.5) + 0.495 * std::log(0.495 / 0.5);
  CHECK(KlDivergence({0.505, 0.495}, {0.5, 0.5}) == doctest::Approx(kl).epsilon(1e-12));
  CHECK(kl == doctest::Approx(5.0e-5).epsilon(1e-3));

  // ImprovedPolicyAt with beta = 0 returns the prior bit for bit.
  RandomStream rng(8);
  PpiConfig cfg = TinyPpi();
  cfg.beta = 0.0;
  nn::ModelParams p = nn::InitParams(cfg.arch, rng);
  Trajectory h;
  h.steps.push_back({Observation::kStart, 0.0, Action::kDefect});
  const ActionDist a = ImprovedPolicyAt(p, h, Observation::kDC, 10, cfg, rng);
  const ActionDist b = PriorPolicy(p, h, Observation::kDC);
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
}

TEST_CASE("equilibrium diagnostics of hand-built models") {
  EpisodeConfig ecfg;
  ecfg.horizon = 6;
  RandomStream rng(9);
  TrajectoryDataset d = BuildPretrainDataset(5, ecfg, rng);
  PpiConfig cfg;
  cfg.rollout_depth = 1;
  cfg.n_rollouts_per_action = 1;
  cfg.beta = 0.01;
  auto model = testing::ActionValueModel(2.0, 0.0);
  RandomStream q(10);
  auto rep = EquilibriumCheck(model, d.records(), cfg, ecfg.horizon, q);
  const double kl = KlDivergence(ImprovedPolicy({0.5, 0.5}, {2.0, 0.0}, 0.01), {0.5, 0.5});
  CHECK(rep.on_path_action_kl == doctest::Approx(kl).epsilon(1e-9));
  CHECK(rep.on_path_action_kl == doctest::Approx(5.0e-5).epsilon(0.1));
  CHECK(rep.q_flatness == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(rep.steps == 60);

  // A value gap of one gives a quarter of that KL.
  auto half = testing::ActionValueModel(1.0, 0.0);
  RandomStream q2(10);
  auto rep1 = EquilibriumCheck(half, d.records(), cfg, ecfg.horizon, q2);
  CHECK(rep1.on_path_action_kl == doctest::Approx(1.2499e-5).epsilon(1e-3));

  cfg.beta = 0.0;
  RandomStream q3(10);
  CHECK(EquilibriumCheck(model, d.records(), cfg, ecfg.horizon, q3).on_path_action_kl == 0.0);

  // A prior with all mass on one action contributes no flatness.
  cfg.beta = 0.01;
  auto certain = model;
  certain.block(nn::Block::kHeadActionB)(0, 0) = 1000.0;
  RandomStream q4(10);
  auto rep2 = EquilibriumCheck(certain, d.records(), cfg, ecfg.horizon, q4);
  CHECK(rep2.q_flatness == 0.0);
  CHECK(rep2.on_path_action_kl == 0.0);
}

TEST_CASE("PPI loop") {
  PpiConfig cfg = TinyPpi();
  EpisodeConfig ecfg;
  ecfg.horizon = 5;
  MetricsContext ctx{"t", "ppi", 1};
  auto run = [&](int phases) {
    PpiConfig c = cfg;
    c.n_phases = phases;
    RandomStream rng(14);
    TrajectoryDataset d0 = BuildPretrainDataset(20, ecfg, rng);
    PpiCollector collect = [&](int, std::span<PpiAgent* const> learners, RandomStream& r,
                               std::vector<MetricsRow>&) {
      std::vector<std::vector<Trajectory>> out(1);
      TabularEpisodePolicy opp(NamedTabular("TFT"));
      for (int e = 0; e < c.n_samples_per_phase; ++e) {
        SessionPolicy me(*learners[0], ecfg);
        out[0].push_back(PlayEpisode(me, opp, ecfg, r).first);
      }
      return out;
    };
    RandomStream rr(15);
    return RunPpi({d0}, c, collect, rr, ctx);
  };
  auto r0 = run(0);
  CHECK(r0.datasets[0].size() == 40);
  auto r2 = run(2);
  CHECK(r2.datasets[0].size() == 40 + 2 * 20);
  CHECK(r2.datasets[0].CountPhase(1) == 20);
  CHECK(r2.datasets[0].CountPhase(2) == 20);
  auto again = run(2);
  CHECK(again.metrics == r2.metrics);
  CHECK(again.params[0].data() == r2.params[0].data());
}

}  // namespace ipd
