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

#include "ipd/a2c.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "ipd/error.h"
#include "ipd/population.h"

namespace ipd {

using nn::Block;
using nn::Matrix;
using nn::ModelParams;

void Validate(const A2cHyper& h) {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (h.batch_size < 1) throw ConfigError("a2c.batch_size must be >= 1");
  if (!unit(h.gamma)) throw ConfigError("a2c.gamma must lie in [0,1]");
  if (!unit(h.td_lambda)) throw ConfigError("a2c.td_lambda must lie in [0,1]");
  if (!unit(h.gae_lambda)) throw ConfigError("a2c.gae_lambda must lie in [0,1]");
  if (!(h.reward_rescaling > 0.0)) throw ConfigError("a2c.reward_rescaling must be > 0");
  if (!(h.value_coefficient >= 0.0)) throw ConfigError("a2c.value_coefficient must be >= 0");
  if (!(h.entropy_reg >= 0.0)) throw ConfigError("a2c.entropy_reg must be >= 0");
  if (!(h.learning_rate >= 0.0)) throw ConfigError("a2c.learning_rate must be >= 0");
  if (!(h.adam_epsilon > 0.0)) throw ConfigError("a2c.adam_epsilon must be > 0");
  if (!(h.max_grad_norm > 0.0)) throw ConfigError("a2c.max_grad_norm must be > 0");
}

A2cHyper A2cPreset(int step) {
  A2cHyper h;
  switch (step) {
    case 1:
      break;
    case 2:
      h.advantages_normalization = false;
      h.reward_rescaling = 0.05;
      h.td_lambda = h.gae_lambda = 1.0;
      break;
    case 3:
      h.batch_size = 4096;
      h.reward_rescaling = 0.02;
      h.td_lambda = h.gae_lambda = 0.95;
      h.learning_rate = 0.0005;
      break;
    case 4:
      h.batch_size = 4096;
      h.reward_rescaling = 0.02;
      h.td_lambda = h.gae_lambda = 1.0;
      h.entropy_reg = 0.01;
      h.learning_rate = 0.001;
      break;
    default:
      throw ConfigError("a2c preset step must be 1..4, got " + std::to_string(step));
  }
  return h;
}

nn::OptimizerConfig A2cOptimizer(const A2cHyper& h) {
  nn::OptimizerConfig o;
  o.learning_rate = h.learning_rate;
  o.weight_decay = 0.0;
  o.beta1 = 0.9;
  o.beta2 = 0.999;
  o.epsilon = h.adam_epsilon;
  o.max_grad_norm = h.max_grad_norm;
  return o;
}

namespace {

int Offset(std::span<const Trajectory* const> batch) {
  return batch[0]->conditioning.empty() ? 0 : 1;
}

void CheckBatch(std::span<const Trajectory* const> batch) {
  if (batch.empty()) throw ContractError("empty trajectory batch");
  const std::size_t T = batch[0]->size();
  const bool cond = !batch[0]->conditioning.empty();
  for (const Trajectory* t : batch) {
    if (t->size() != T) throw ContractError("batch trajectories differ in length");
    if (t->conditioning.empty() == cond) {
      throw ContractError("batch mixes conditioned and unconditioned trajectories");
    }
  }
  if (T == 0) throw ContractError("empty trajectory");
}

Matrix ActionLogits(const ModelParams& p, const Matrix& s) {
  Matrix l = s * p.block(Block::kHeadActionW).transpose();
  l.rowwise() += p.block(Block::kHeadActionB).row(0);
  return l;
}

nn::Vector Values(const ModelParams& p, const Matrix& s) {
  nn::Vector v = s * p.block(Block::kValueW).row(0).transpose();
  v.array() += p.block(Block::kValueB)(0, 0);
  return v;
}

}  // namespace

nn::TokenBatch A2cTokens(std::span<const Trajectory* const> batch) {
  CheckBatch(batch);
  const int T = static_cast<int>(batch[0]->size());
  const std::size_t n = batch.size();
  nn::TokenBatch tb;
  tb.steps.assign(T, std::vector<nn::Token>(n));
  for (std::size_t b = 0; b < n; ++b) {
    for (int t = 0; t < T; ++t) tb.steps[t][b].obs = static_cast<int>(batch[b]->steps[t].observation);
  }
  if (Offset(batch) == 1) {
    std::vector<const double*> z(n);
    for (std::size_t b = 0; b < n; ++b) {
      if (batch[b]->conditioning.size() != static_cast<std::size_t>(nn::kConditioningDim)) {
        throw ContractError("conditioning vector must have 10 entries");
      }
      z[b] = batch[b]->conditioning.data();
    }
    tb = InjectConditioning(std::move(tb), z);
  }
  return tb;
}

PolicyValueOut PolicyValue(const ModelParams& params, const Trajectory& history,
                           Observation current) {
  Matrix h = Matrix::Zero(1, params.arch().hidden_dim);
  std::vector<nn::Token> tok(1);
  if (!history.conditioning.empty()) {
    tok[0].cond = history.conditioning.data();
    h = nn::GruCell(params, nn::EmbedBatch(params, tok), h);
  }
  for (std::size_t t = 0; t <= history.size(); ++t) {
    tok[0] = nn::Token{};
    tok[0].obs = static_cast<int>(t < history.size() ? history.steps[t].observation : current);
    h = nn::GruCell(params, nn::EmbedBatch(params, tok), h);
  }
  Matrix s = nn::SwishRows(h);
  Matrix p = nn::SoftmaxRows(ActionLogits(params, s));
  return {{p(0, 0), p(0, 1)}, Values(params, s)(0)};
}

Advantages ComputeAdvantages(std::span<const double> rewards, std::span<const double> values,
                             double bootstrap, const A2cHyper& h) {
  if (rewards.size() != values.size()) {
    throw ContractError("rewards and values differ in length");
  }
  const std::size_t T = rewards.size();
  Advantages out;
  out.advantages.assign(T, 0.0);
  out.targets.assign(T, 0.0);
  double gae = 0.0;
  double ret = bootstrap;
  double next_v = bootstrap;
  for (std::size_t i = T; i-- > 0;) {
    const double r = rewards[i] * h.reward_rescaling;
    const double delta = r + h.gamma * next_v - values[i];
    gae = delta + h.gamma * h.gae_lambda * gae;
    // TD(lambda) return, bootstrapping from the next value with weight 1-lambda.
    ret = r + h.gamma * ((1.0 - h.td_lambda) * next_v + h.td_lambda * ret);
    out.advantages[i] = gae;
    out.targets[i] = ret;
    next_v = values[i];
  }
  return out;
}

void NormalizeAdvantages(std::vector<Advantages>& batch) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& a : batch) {
    for (double x : a.advantages) sum += x;
    n += a.advantages.size();
  }
  if (n == 0) return;
  const double mean = sum / n;
  double sq = 0.0;
  for (const auto& a : batch) {
    for (double x : a.advantages) sq += (x - mean) * (x - mean);
  }
  const double denom = std::sqrt(sq / n) + 1e-8;
  for (auto& a : batch) {
    for (double& x : a.advantages) x = (x - mean) / denom;
  }
}

A2cLossParts A2cLoss(const ModelParams& params, std::span<const Trajectory* const> batch,
                     std::span<const Advantages> adv, const A2cHyper& h, nn::Gradients* grads) {
  CheckBatch(batch);
  if (adv.size() != batch.size()) throw ContractError("one advantage record per episode");
  const int T = static_cast<int>(batch[0]->size());
  const int N = static_cast<int>(batch.size());
  for (const auto& a : adv) {
    if (static_cast<int>(a.advantages.size()) != T || static_cast<int>(a.targets.size()) != T) {
      throw ContractError("advantage length differs from the horizon");
    }
  }
  const int off = Offset(batch);
  nn::TokenBatch tokens = A2cTokens(batch);
  nn::GruTape tape = nn::ForwardTape(params, tokens);
  std::vector<Matrix> ds(tokens.length());
  const double inv_n = 1.0 / N;
  A2cLossParts out;
  double entropy_sum = 0.0;
  const Matrix none;
  const nn::Vector no_vec;
  for (int t = 0; t < T; ++t) {
    const Matrix& s = tape.s[off + t];
    Matrix logp = nn::LogSoftmaxRows(ActionLogits(params, s));
    Matrix pi = logp.array().exp().matrix();
    nn::Vector v = Values(params, s);
    Matrix d_logits(N, 2);
    nn::Vector d_v(N);
    double pol = 0.0, val = 0.0, negent = 0.0;
    for (int b = 0; b < N; ++b) {
      const int a = static_cast<int>(batch[b]->steps[t].action);
      const double A = adv[b].advantages[t];
      const double err = v(b) - adv[b].targets[t];
      const double ne = pi(b, 0) * logp(b, 0) + pi(b, 1) * logp(b, 1);
      pol -= logp(b, a) * A;
      val += err * err;
      negent += ne;
      for (int j = 0; j < 2; ++j) {
        const double onehot = j == a ? 1.0 : 0.0;
        d_logits(b, j) = (A * (pi(b, j) - onehot) + h.entropy_reg * pi(b, j) * (logp(b, j) - ne)) *
                         inv_n;
      }
      d_v(b) = 2.0 * h.value_coefficient * err * inv_n;
    }
    const double step_loss = pol + h.value_coefficient * val + h.entropy_reg * negent;
    if (!std::isfinite(step_loss)) throw NonFiniteError("A2C loss is not finite", t);
    out.policy += pol * inv_n;
    out.value += val * inv_n;
    entropy_sum -= negent;
    if (grads != nullptr) ds[off + t] = nn::HeadsBackward(params, s, none, d_logits, no_vec, d_v, *grads);
  }
  out.entropy = entropy_sum / (static_cast<double>(N) * T);
  out.total = out.policy + h.value_coefficient * out.value -
              h.entropy_reg * entropy_sum * inv_n;
  if (grads != nullptr) nn::BackwardTape(params, tokens, tape, ds, *grads);
  return out;
}

std::vector<std::vector<double>> A2cValues(const ModelParams& params,
                                           std::span<const Trajectory* const> batch) {
  CheckBatch(batch);
  const int T = static_cast<int>(batch[0]->size());
  const int off = Offset(batch);
  nn::TokenBatch tokens = A2cTokens(batch);
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(batch.size()), params.arch().hidden_dim);
  std::vector<std::vector<double>> out(batch.size(), std::vector<double>(T));
  for (int k = 0; k < tokens.length(); ++k) {
    h = nn::GruCell(params, nn::EmbedBatch(params, tokens.steps[k]), h);
    if (k < off) continue;
    nn::Vector v = Values(params, nn::SwishRows(h));
    for (std::size_t b = 0; b < batch.size(); ++b) out[b][k - off] = v(b);
  }
  return out;
}

namespace {

class A2cSession : public BatchSession {
 public:
  A2cSession(const ModelParams& params, std::span<const std::vector<double>* const> conditioning)
      : params_(params),
        h_(Matrix::Zero(static_cast<Eigen::Index>(conditioning.size()), params.arch().hidden_dim)),
        cond_(conditioning.begin(), conditioning.end()) {}

  void Act(std::span<const Trajectory* const> histories, std::span<const Observation> current,
           std::span<RandomStream* const>, std::span<ActionDist> out) override {
    const std::size_t n = histories.size();
    if (n != cond_.size()) throw ContractError("A2cSession: row count changed");
    if (histories[0]->size() == 0) {
      h_.setZero();
      if (std::any_of(cond_.begin(), cond_.end(), [](auto* c) { return c != nullptr; })) {
        static const std::vector<double> kZero(nn::kConditioningDim, 0.0);
        std::vector<nn::Token> toks(n);
        for (std::size_t i = 0; i < n; ++i) {
          toks[i].cond = cond_[i] != nullptr ? cond_[i]->data() : kZero.data();
        }
        h_ = nn::GruCell(params_, nn::EmbedBatch(params_, toks), h_);
      }
    }
    std::vector<nn::Token> toks(n);
    for (std::size_t i = 0; i < n; ++i) toks[i].obs = static_cast<int>(current[i]);
    h_ = nn::GruCell(params_, nn::EmbedBatch(params_, toks), h_);
    Matrix p = nn::SoftmaxRows(ActionLogits(params_, nn::SwishRows(h_)));
    for (std::size_t i = 0; i < n; ++i) out[i] = {p(i, 0), p(i, 1)};
  }

 private:
  const ModelParams& params_;
  Matrix h_;
  std::vector<const std::vector<double>*> cond_;
};

}  // namespace

A2cAgent::A2cAgent(ModelParams params) : params_(std::move(params)) {}

std::unique_ptr<BatchSession> A2cAgent::NewSession(
    std::span<const std::vector<double>* const> conditioning, const EpisodeConfig&) const {
  return std::make_unique<A2cSession>(params_, conditioning);
}

A2cLearner InitA2cLearner(const nn::ModelArch& arch, RandomStream& rng) {
  A2cLearner l{nn::InitParams(arch, rng), {}};
  l.opt = nn::InitOptState(l.params);
  return l;
}

A2cStepStats A2cUpdate(A2cLearner& learner, std::span<const Trajectory> trajectories,
                       const A2cHyper& h) {
  if (trajectories.empty()) throw ContractError("A2C update with no trajectories");
  std::vector<const Trajectory*> batch;
  for (const auto& t : trajectories) batch.push_back(&t);
  auto values = A2cValues(learner.params, batch);
  std::vector<Advantages> adv;
  A2cStepStats st;
  std::size_t coop = 0, steps = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::vector<double> r;
    for (const auto& s : batch[i]->steps) {
      r.push_back(s.reward);
      coop += s.action == Action::kCooperate;
    }
    steps += r.size();
    st.mean_return += batch[i]->Return();
    adv.push_back(ComputeAdvantages(r, values[i], 0.0, h));
  }
  st.mean_return /= batch.size();
  st.coop_rate = static_cast<double>(coop) / steps;
  if (h.advantages_normalization) NormalizeAdvantages(adv);
  nn::Gradients grads(learner.params.arch());
  A2cLossParts loss = A2cLoss(learner.params, batch, adv, h, &grads);
  st.loss = loss.total;
  st.entropy = loss.entropy;
  st.grad_norm = nn::ClipByGlobalNorm(grads, h.max_grad_norm);
  nn::AdamWStep(learner.params, grads, learner.opt, A2cOptimizer(h));
  if (!learner.params.AllFinite()) throw NonFiniteError("A2C parameters became non-finite", 0);
  return st;
}

std::vector<MetricsRow> A2cTrainIteration(std::vector<A2cLearner>& learners, int iteration,
                                          const A2cCollector& collect, const A2cHyper& h,
                                          RandomStream& rng, const MetricsContext& ctx) {
  Validate(h);
  std::vector<MetricsRow> rows;
  std::vector<A2cAgent> agents;
  agents.reserve(learners.size());
  for (const auto& l : learners) agents.emplace_back(l.params);
  std::vector<const A2cAgent*> ptrs;
  for (const auto& a : agents) ptrs.push_back(&a);
  auto data = collect(iteration, ptrs, rng, rows);
  if (data.size() != learners.size()) {
    throw ContractError("collector must return one trajectory list per learner");
  }
  for (std::size_t i = 0; i < learners.size(); ++i) {
    if (data[i].empty()) continue;
    A2cStepStats st = A2cUpdate(learners[i], data[i], h);
    const std::string sfx = "_learner" + std::to_string(i);
    rows.push_back(ctx.Row(iteration, -1, "batch_return" + sfx, st.mean_return));
    rows.push_back(ctx.Row(iteration, -1, "batch_coop_rate" + sfx, st.coop_rate));
    rows.push_back(ctx.Row(iteration, -1, "entropy" + sfx, st.entropy));
    rows.push_back(ctx.Row(iteration, -1, "loss" + sfx, st.loss));
  }
  return rows;
}

}  // namespace ipd
