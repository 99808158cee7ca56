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
#include <filesystem>
#include <fstream>

#include "gradcheck.h"
#include "ipd/error.h"
#include "ipd/nn/checkpoint.h"
#include "ipd/nn/model.h"
#include "ipd/nn/optim.h"
#include "ipd/nn/recurrent.h"

namespace ipd::nn {
namespace {

ModelArch Tiny(int cond = 0) {
  ModelArch a;
  a.hidden_dim = 4;
  a.embed_dim = 3;
  a.conditioning_dim = cond;
  return a;
}

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ipd_nn_" + name)).string();
}

}  // namespace

TEST_CASE("embedding") {
  ModelParams zero(Tiny());
  Token tok;
  tok.obs = 2;
  tok.action = 1;
  tok.reward = 3.0;
  CHECK(EmbedStep(zero, tok).isZero());

  RandomStream rng(1);
  ModelParams p = InitParams(Tiny(), rng);
  Token start;
  start.obs = 0;
  RowVector e = EmbedStep(p, start);
  for (int i = 0; i < 3; ++i) CHECK(e(i) == p.block(Block::kObsEmbed)(i, 0));

  // The derivative of embedding entry i with respect to obs_embed(i, o)
  // is one for the observed column and zero elsewhere.
  const double h = 1e-6;
  for (int o = 0; o < kObsVocab; ++o) {
    ModelParams q = p;
    q.block(Block::kObsEmbed)(1, o) += h;
    const double d = (EmbedStep(q, start)(1) - e(1)) / h;
    CHECK(d == doctest::Approx(o == 0 ? 1.0 : 0.0).epsilon(1e-6));
  }
}

TEST_CASE("GRU basics") {
  RandomStream rng(2);
  ModelParams p = InitParams(Tiny(), rng);
  CHECK(GruForward(p, {}).empty());
  CHECK(Swish(0.0) == 0.0);
  CHECK(Swish(1.0) == doctest::Approx(0.731059).epsilon(1e-6));
  // Swish derivative against finite differences.
  for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    CHECK(SwishGrad(x) == doctest::Approx((Swish(x + 1e-6) - Swish(x - 1e-6)) / 2e-6).epsilon(1e-8));
  }
}

TEST_CASE("heads") {
  ModelParams zero(Tiny());
  HeadOutputs out = Heads(zero, Matrix::Zero(2, 4));
  CHECK(out.obs_logits.isZero());
  CHECK(out.action_logits.isZero());
  CHECK(out.reward.isZero());
  Matrix so = SoftmaxRows(out.obs_logits), sa = SoftmaxRows(out.action_logits);
  for (int j = 0; j < 5; ++j) CHECK(so(0, j) == doctest::Approx(0.2));
  for (int j = 0; j < 2; ++j) CHECK(sa(1, j) == doctest::Approx(0.5));
  Matrix big(1, 2);
  big << 1000.0, 0.0;
  CHECK(SoftmaxRows(big)(0, 0) == 1.0);
  CHECK(std::isfinite(LogSoftmaxRows(big)(0, 1)));

  // Head gradients against finite differences: loss = sum of all outputs
  // weighted by fixed random coefficients.
  RandomStream rng(3);
  ModelParams p = testing::RandomTinyModel(false, rng);
  Matrix s = Matrix::Random(3, 4);
  Matrix co = Matrix::Random(3, 5), ca = Matrix::Random(3, 2);
  Vector cr = Vector::Random(3), cv = Vector::Random(3);
  auto loss = [&](const ModelParams& q) {
    HeadOutputs h = Heads(q, s);
    return (h.obs_logits.array() * co.array()).sum() + (h.action_logits.array() * ca.array()).sum() +
           h.reward.dot(cr) + h.value.dot(cv);
  };
  Gradients g(p.arch());
  HeadsBackward(p, s, co, ca, cr, cv, g);
  auto r = testing::CompareWithFiniteDifferences(p, g, loss);
  CHECK(r.max_rel_error <= 1e-6);
}

TEST_CASE("sequence-model backward pass") {
  RandomStream rng(4);
  for (int i = 0; i < 5; ++i) {
    auto r = testing::SequenceLossCheck(rng);
    INFO(r.worst);
    CHECK(r.max_rel_error <= 1e-4);
  }
  // Loss independent of a block (value head) gives that block zero
  // gradient; doubling the loss weights doubles every entry.
  ModelParams p = testing::RandomTinyModel(false, rng);
  auto trajs = testing::RandomTrajectories(2, 5, false, rng);
  std::vector<const Trajectory*> batch{&trajs[0], &trajs[1]};
  Gradients g1(p.arch()), g2(p.arch());
  SequenceLoss(p, batch, {1, 1, 1}, &g1);
  SequenceLoss(p, batch, {2, 2, 2}, &g2);
  CHECK(g1.block(Block::kValueW).isZero());
  CHECK(g1.block(Block::kValueB).isZero());
  for (std::size_t k = 0; k < g1.size(); ++k) CHECK(g2.data()[k] == 2.0 * g1.data()[k]);
}

TEST_CASE("global-norm clipping") {
  ModelParams g(Tiny());
  g.data()[0] = 0.3;
  g.data()[1] = 0.4;
  ModelParams before = g;
  CHECK(ClipByGlobalNorm(g, 1.0) == doctest::Approx(0.5));
  CHECK(g.data() == before.data());
  g.data()[0] = 1.2;
  g.data()[1] = 1.6;
  before = g;
  CHECK(ClipByGlobalNorm(g, 1.0) == doctest::Approx(2.0));
  CHECK(std::abs(GlobalNorm(g) - 1.0) <= 1e-12);
  double dot = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) dot += g.data()[k] * before.data()[k];
  CHECK(dot / (GlobalNorm(g) * GlobalNorm(before)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("AdamW") {
  OptimizerConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.weight_decay = 0.1;
  ModelParams p(Tiny());
  p.data()[0] = 2.0;
  ModelParams zero(Tiny());
  OptState st = InitOptState(p);
  AdamWStep(p, zero, st, cfg);
  CHECK(p.data()[0] == doctest::Approx(2.0 * (1 - 1e-2 * 0.1)).epsilon(1e-15));
  CHECK(st.step == 1);
  AdamWStep(p, zero, st, cfg);
  CHECK(st.step == 2);

  // Constant gradient, no decay: every step moves by about lr.
  cfg.weight_decay = 0.0;
  ModelParams q(Tiny());
  ModelParams g(Tiny());
  g.data()[0] = 0.37;
  OptState s2 = InitOptState(q);
  double prev = 0.0;
  for (int i = 0; i < 200; ++i) {
    prev = q.data()[0];
    AdamWStep(q, g, s2, cfg);
  }
  CHECK((prev - q.data()[0]) == doctest::Approx(cfg.learning_rate).epsilon(1e-4));
}

TEST_CASE("checkpoint round trip and failures") {
  RandomStream rng(5);
  ModelParams p = InitParams(Tiny(kConditioningDim), rng);
  const std::string path = TempPath("rt.ckpt");
  SaveCheckpoint(p, path);
  ModelParams q = LoadCheckpoint(path);
  CHECK(q.arch() == p.arch());
  CHECK(q.data() == p.data());
  CHECK(q.Checksum() == p.Checksum());

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::string bad = bytes;
    bad[8] = 7;  // version field
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bad;
    CHECK_THROWS_AS(LoadCheckpoint(path), VersionError);
  }
  {
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(LoadCheckpoint(path), CorruptError);
  }
  CHECK_THROWS_AS(LoadCheckpoint(TempPath("does_not_exist.ckpt")), IoError);
  std::filesystem::remove(path);
}

}  // namespace ipd::nn
