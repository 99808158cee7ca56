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

#include <string>

#include "ipd/config.h"
#include "ipd/error.h"

namespace ipd {
namespace {

std::string ErrorOf(const std::string& text, const std::string& profile = "") {
  try {
    ParseRunConfig(text, profile);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("round trip is a fixed point") {
  for (const char* profile : {"full", "desk"}) {
    RunConfig c = ProfileDefaults(profile);
    const std::string once = RunConfigToJson(c);
    const std::string twice = RunConfigToJson(ParseRunConfig(once));
    CHECK(once == twice);
  }
  RunConfig c = ParseRunConfig(R"({"profile": "desk", "ppi": {"beta": 0.25},
                                   "a2c": {"overrides": {"learning_rate": 0.01}},
                                   "seeds": [7]})");
  const std::string once = RunConfigToJson(c);
  CHECK(RunConfigToJson(ParseRunConfig(once)) == once);
  CHECK(c.ppi.beta == 0.25);
  CHECK(c.seeds == std::vector<std::uint64_t>{7});
  // Overrides merge with the profile's.
  CHECK(ResolveA2c(c).learning_rate == 0.01);
  CHECK(ResolveA2c(c).batch_size == 256);
}

TEST_CASE("profiles") {
  RunConfig desk = ProfileDefaults("desk");
  CHECK(desk.episode.horizon == 32);
  CHECK(desk.seeds.size() == 3);
  RunConfig full = ProfileDefaults("full");
  CHECK(full.episode.horizon == 100);
  CHECK(full.ppi.n_phases == 30);
  CHECK(full.ppi.beta == 0.01);
  CHECK(full.ppi.n_pretrain_trajectories == 200000);
  CHECK(ParseRunConfig(R"({"episode": {"horizon": 9}})", "desk").profile == "desk");
  // The argument wins over the document.
  CHECK(ParseRunConfig(R"({"profile": "full"})", "desk").episode.horizon == 32);
  CHECK_THROWS_AS(ProfileDefaults("laptop"), ConfigError);
}

TEST_CASE("errors name the key") {
  CHECK(ErrorOf(R"({"episode": {"horizon": 9}})").find("profile") != std::string::npos);
  CHECK(ErrorOf(R"({"profile": "desk", "ppi": {"betta": 1}})").find("ppi.betta") != std::string::npos);
  CHECK(ErrorOf(R"({"profile": "desk", "extra": 1})").find("extra") != std::string::npos);
  CHECK(ErrorOf(R"({"profile": "desk", "episode": {"horizon": "long"}})").find("episode.horizon") !=
        std::string::npos);
  CHECK(ErrorOf(R"({"profile": "desk", "a2c": {"overrides": {"lr": 1}}})").find("lr") !=
        std::string::npos);
  CHECK(!ErrorOf("{not json").empty());
}

TEST_CASE("validation") {
  RunConfig c = ProfileDefaults("desk");
  c.ppi.n_phases = -1;
  CHECK_THROWS_AS(Validate(c), ConfigError);
  c = ProfileDefaults("desk");
  c.experiment.eval_strategies = {"Grim"};
  CHECK_THROWS_AS(Validate(c), ConfigError);
  c = ProfileDefaults("desk");
  c.seeds.clear();
  CHECK_THROWS_AS(Validate(c), ConfigError);
}

TEST_CASE("experiment resolution") {
  RunConfig c = ProfileDefaults("full");
  c.experiment.kind = ExperimentKind::kStep1BestResponse;
  CHECK(ResolvePool(c).learner_fraction == 0.0);
  CHECK(ResolveA2c(c).learning_rate == 0.005);
  c.experiment.kind = ExperimentKind::kStep3MutualExtortion;
  CHECK(ResolveA2c(c).batch_size == 4096);
  CHECK(ResolveA2c(c).gae_lambda == 0.95);
  c.experiment.kind = ExperimentKind::kAblationOpponentId;
  CHECK(ResolvePool(c).ablation == Ablation::kOpponentId);
  CHECK(ResolveArch(c).conditioning_dim == 10);
  CHECK(ResolveA2c(c).entropy_reg == 0.01);
  c.experiment.kind = ExperimentKind::kAblationNoTabular;
  CHECK(ResolvePool(c).ablation == Ablation::kNoTabular);
  CHECK(ResolveArch(c).conditioning_dim == 0);
  c.a2c.preset = "step2";
  CHECK(ResolveA2c(c).reward_rescaling == 0.05);
  CHECK(ParseExperimentKind("step1") == ExperimentKind::kStep1BestResponse);
  CHECK(ParseExperimentKind("mixed_training") == ExperimentKind::kMixedTraining);
  CHECK_THROWS_AS(ParseExperimentKind("step5"), ConfigError);
  CHECK_THROWS_AS(ParseAlgorithm("dqn"), ConfigError);
}

}  // namespace ipd
