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

#include "ipd/ppi.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ipd/error.h"
#include "ipd/population.h"
#include "ipd/tabular.h"

namespace ipd {

using nn::Block;
using nn::Matrix;
using nn::ModelParams;

void Validate(const PpiConfig& cfg) {
  nn::Validate(cfg.arch);
  nn::Validate(cfg.optimizer);
  if (cfg.n_phases < 0) throw ConfigError("ppi.n_phases must be >= 0");
  if (cfg.n_samples_per_phase < 1) throw ConfigError("ppi.n_samples_per_phase must be >= 1");
  if (cfg.n_pretrain_trajectories < 1) {
    throw ConfigError("ppi.n_pretrain_trajectories must be >= 1");
  }
  if (cfg.train_epochs < 0) throw ConfigError("ppi.train_epochs must be >= 0");
  if (cfg.train_batch_size < 1) throw ConfigError("ppi.train_batch_size must be >= 1");
  if (!(cfg.beta >= 0.0)) throw ConfigError("ppi.beta must be >= 0");
  if (cfg.rollout_depth < 1) throw ConfigError("ppi.rollout_depth must be >= 1");
  if (cfg.n_rollouts_per_action < 1) throw ConfigError("ppi.n_rollouts_per_action must be >= 1");
  if (!(cfg.rollout_gamma >= 0.0 && cfg.rollout_gamma <= 1.0)) {
    throw ConfigError("ppi.rollout_gamma must lie in [0,1]");
  }
  const auto& w = cfg.loss_weights;
  if (!(w.obs >= 0.0 && w.action >= 0.0 && w.reward >= 0.0)) {
    throw ConfigError("ppi.loss_weights must be >= 0");
  }
}

TrajectoryDataset BuildPretrainDataset(int n, const EpisodeConfig& cfg, RandomStream& rng,
                                       bool opponent_conditioning) {
  if (n < 1) throw ContractError("pretraining dataset size must be >= 1");
  TrajectoryDataset d;
  for (int e = 0; e < n; ++e) {
    RandomStream er = rng.Derive(static_cast<std::uint64_t>(e));
    const TabularPolicy a = SampleUniformTabular(er);
    const TabularPolicy b = SampleUniformTabular(er);
    TabularEpisodePolicy p1(a), p2(b);
    auto [t1, t2] = PlayEpisode(p1, p2, cfg, er);
    if (opponent_conditioning) {
      t1.conditioning = ConditioningVector(b);
      t2.conditioning = ConditioningVector(a);
    }
    d.Append(std::move(t1), 0);
    d.Append(std::move(t2), 0);
  }
  return d;
}

int PerceptStep(bool conditioned, int t) { return (conditioned ? 1 : 0) + 2 * t; }
int ActStep(bool conditioned, int t) { return (conditioned ? 1 : 0) + 2 * t + 1; }

namespace {

// Shared horizon and conditioning presence of a batch.
std::pair<int, bool> BatchShape(std::span<const Trajectory* const> batch) {
  if (batch.empty()) throw ContractError("empty trajectory batch");
  const int T = static_cast<int>(batch[0]->size());
  const bool cond = !batch[0]->conditioning.empty();
  for (const Trajectory* t : batch) {
    if (static_cast<int>(t->size()) != T) throw ContractError("batch trajectories differ in length");
    if (t->conditioning.empty() == cond) {
      throw ContractError("batch mixes conditioned and unconditioned trajectories");
    }
    if (cond && t->conditioning.size() != static_cast<std::size_t>(nn::kConditioningDim)) {
      throw ContractError("conditioning vector must have 10 entries");
    }
  }
  if (T < 1) throw ContractError("empty trajectory");
  return {T, cond};
}

}  // namespace

nn::TokenBatch PpiTokens(std::span<const Trajectory* const> batch) {
  auto [T, cond] = BatchShape(batch);
  const std::size_t n = batch.size();
  nn::TokenBatch tb;
  tb.steps.assign(2 * T, std::vector<nn::Token>(n));
  for (std::size_t b = 0; b < n; ++b) {
    const auto& steps = batch[b]->steps;
    for (int t = 0; t < T; ++t) {
      nn::Token& p = tb.steps[2 * t][b];
      p.obs = static_cast<int>(steps[t].observation);
      if (t > 0) p.reward = steps[t - 1].reward;
      tb.steps[2 * t + 1][b].action = static_cast<int>(steps[t].action);
    }
  }
  if (cond) {
    std::vector<const double*> z(n);
    for (std::size_t b = 0; b < n; ++b) z[b] = batch[b]->conditioning.data();
    tb = InjectConditioning(std::move(tb), z);
  }
  return tb;
}

SequenceLossParts SequenceLoss(const ModelParams& params, std::span<const Trajectory* const> batch,
                               const LossWeights& w, nn::Gradients* grads) {
  auto [T, cond] = BatchShape(batch);
  const int N = static_cast<int>(batch.size());
  nn::TokenBatch tokens = PpiTokens(batch);
  nn::GruTape tape = nn::ForwardTape(params, tokens);

  const double scale_nt = 1.0 / (static_cast<double>(N) * T);
  const double scale_obs = T > 1 ? 1.0 / (static_cast<double>(N) * (T - 1)) : 0.0;
  auto wa = params.block(Block::kHeadActionW);
  auto ba = params.block(Block::kHeadActionB);
  auto wo = params.block(Block::kHeadObsW);
  auto bo = params.block(Block::kHeadObsB);
  auto wr = params.block(Block::kHeadRewardW);
  const double br = params.block(Block::kHeadRewardB)(0, 0);

  std::vector<Matrix> ds(tokens.length());
  double sum_act = 0.0, sum_obs = 0.0, sum_rew = 0.0;
  const Matrix none;
  const nn::Vector no_vec;
  for (int t = 0; t < T; ++t) {
    // Action prediction at the percept token.
    const int ps = PerceptStep(cond, t);
    const Matrix& sp = tape.s[ps];
    Matrix logits = sp * wa.transpose();
    logits.rowwise() += ba.row(0);
    Matrix logp = nn::LogSoftmaxRows(logits);
    double ce = 0.0;
    for (int b = 0; b < N; ++b) ce -= logp(b, static_cast<int>(batch[b]->steps[t].action));
    if (!std::isfinite(ce)) throw NonFiniteError("action loss is not finite", t);
    sum_act += ce;
    if (grads != nullptr && w.action != 0.0) {
      Matrix d = logp.array().exp().matrix();
      for (int b = 0; b < N; ++b) d(b, static_cast<int>(batch[b]->steps[t].action)) -= 1.0;
      d *= w.action * scale_nt;
      ds[ps] = nn::HeadsBackward(params, sp, none, d, no_vec, no_vec, *grads);
    }

    // Reward and next-observation prediction at the act token.
    const int as = ActStep(cond, t);
    const Matrix& sa = tape.s[as];
    nn::Vector rhat = sa * wr.row(0).transpose();
    rhat.array() += br;
    nn::Vector err(N);
    for (int b = 0; b < N; ++b) err(b) = rhat(b) - batch[b]->steps[t].reward;
    double sq = err.squaredNorm();
    if (!std::isfinite(sq)) throw NonFiniteError("reward loss is not finite", t);
    sum_rew += sq;
    Matrix d_obs;
    if (t + 1 < T) {
      Matrix ol = sa * wo.transpose();
      ol.rowwise() += bo.row(0);
      Matrix ologp = nn::LogSoftmaxRows(ol);
      double oce = 0.0;
      for (int b = 0; b < N; ++b) {
        oce -= ologp(b, static_cast<int>(batch[b]->steps[t + 1].observation));
      }
      if (!std::isfinite(oce)) throw NonFiniteError("observation loss is not finite", t);
      sum_obs += oce;
      if (grads != nullptr && w.obs != 0.0) {
        d_obs = ologp.array().exp().matrix();
        for (int b = 0; b < N; ++b) {
          d_obs(b, static_cast<int>(batch[b]->steps[t + 1].observation)) -= 1.0;
        }
        d_obs *= w.obs * scale_obs;
      }
    }
    if (grads != nullptr) {
      nn::Vector d_rew;
      if (w.reward != 0.0) d_rew = err * (2.0 * w.reward * scale_nt);
      if (d_obs.size() != 0 || d_rew.size() != 0) {
        ds[as] = nn::HeadsBackward(params, sa, d_obs, none, d_rew, no_vec, *grads);
      }
    }
  }

  SequenceLossParts out;
  out.action = sum_act * scale_nt;
  out.reward = sum_rew * scale_nt;
  out.obs = sum_obs * scale_obs;
  out.total = w.obs * out.obs + w.action * out.action + w.reward * out.reward;
  if (grads != nullptr) nn::BackwardTape(params, tokens, tape, ds, *grads);
  return out;
}

TrainResult TrainSequenceModel(const TrajectoryDataset& data, const PpiConfig& cfg,
                               RandomStream& rng) {
  if (data.empty()) throw ContractError("cannot train on an empty dataset");
  RandomStream init_rng = rng.Derive(0);
  RandomStream shuffle_rng = rng.Derive(1);
  TrainResult result{nn::InitParams(cfg.arch, init_rng), {}};
  ModelParams& params = result.params;
  nn::OptState opt = nn::InitOptState(params);
  nn::Gradients grads(cfg.arch);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Trajectory*> batch;
  for (int epoch = 0; epoch < cfg.train_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.Index(i)]);
    }
    double loss_sum = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.train_batch_size)) {
      std::size_t end = std::min(order.size(), start + cfg.train_batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(&data[order[k]]);
      grads.SetZero();
      SequenceLossParts loss = SequenceLoss(params, batch, cfg.loss_weights, &grads);
      nn::ClipByGlobalNorm(grads, cfg.optimizer.max_grad_norm);
      nn::AdamWStep(params, grads, opt, cfg.optimizer);
      loss_sum += loss.total;
      ++n_batches;
    }
    result.epoch_loss.push_back(loss_sum / n_batches);
  }
  if (!params.AllFinite()) throw NonFiniteError("parameters became non-finite", 0);
  return result;
}

ActionDist ImprovedPolicy(const ActionDist& prior, const std::array<double, 2>& q, double beta) {
  if (beta == 0.0) return prior;
  double m = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < 2; ++a) {
    if (prior[a] > 0.0) m = std::max(m, beta * q[a]);
  }
  ActionDist w{};
  for (int a = 0; a < 2; ++a) w[a] = prior[a] > 0.0 ? prior[a] * std::exp(beta * q[a] - m) : 0.0;
  double z = w[0] + w[1];
  return {w[0] / z, w[1] / z};
}

double KlDivergence(const ActionDist& p, const ActionDist& q) {
  double kl = 0.0;
  for (int a = 0; a < 2; ++a) {
    if (p[a] > 0.0) kl += p[a] * std::log(p[a] / q[a]);
  }
  return std::max(kl, 0.0);
}

namespace {

Matrix ActionLogits(const ModelParams& p, const Matrix& s) {
  Matrix l = s * p.block(Block::kHeadActionW).transpose();
  l.rowwise() += p.block(Block::kHeadActionB).row(0);
  return l;
}

Matrix ObsLogits(const ModelParams& p, const Matrix& s) {
  Matrix l = s * p.block(Block::kHeadObsW).transpose();
  l.rowwise() += p.block(Block::kHeadObsB).row(0);
  return l;
}

nn::Vector RewardMean(const ModelParams& p, const Matrix& s) {
  nn::Vector r = s * p.block(Block::kHeadRewardW).row(0).transpose();
  r.array() += p.block(Block::kHeadRewardB)(0, 0);
  return r;
}

Matrix Advance(const ModelParams& p, const std::vector<nn::Token>& toks, const Matrix& h) {
  return nn::GruCell(p, nn::EmbedBatch(p, toks), h);
}

}  // namespace

std::vector<std::array<double, 2>> RolloutQ(const ModelParams& params, const Matrix& h,
                                            std::span<const int> remaining, const PpiConfig& cfg,
                                            std::span<RandomStream* const> rngs) {
  const int rows = static_cast<int>(h.rows());
  const int k = cfg.n_rollouts_per_action;
  const int per_row = 2 * k;
  const int m = rows * per_row;
  if (static_cast<int>(remaining.size()) != rows || static_cast<int>(rngs.size()) != rows) {
    throw ContractError("RolloutQ: one remaining horizon and stream per row");
  }
  // Row layout: history i, candidate c, rollout j -> i*2k + c*k + j.
  Matrix hm(m, h.cols());
  std::vector<nn::Token> toks(m);
  std::vector<int> depth(m);
  for (int i = 0; i < rows; ++i) {
    const int d = std::min(cfg.rollout_depth, remaining[i]);
    if (d < 1) throw ContractError("RolloutQ: no rounds remaining");
    for (int c = 0; c < 2; ++c) {
      for (int j = 0; j < k; ++j) {
        const int r = i * per_row + c * k + j;
        hm.row(r) = h.row(i);
        toks[r].action = c;
        depth[r] = d;
      }
    }
  }
  const int max_depth = *std::max_element(depth.begin(), depth.end());
  std::vector<double> q(m, 0.0);
  double discount = 1.0;
  for (int step = 0; step < max_depth; ++step) {
    // Act token: the action being evaluated or sampled from the prior.
    hm = Advance(params, toks, hm);
    Matrix s = nn::SwishRows(hm);
    nn::Vector rhat = RewardMean(params, s);
    if (cfg.reward_noise) {
      for (int r = 0; r < m; ++r) {
        if (step < depth[r]) rhat(r) += cfg.reward_noise_std * rngs[r / per_row]->Normal();
      }
    }
    for (int r = 0; r < m; ++r) {
      if (step < depth[r]) q[r] += discount * rhat(r);
    }
    discount *= cfg.rollout_gamma;
    if (step + 1 == max_depth) break;

    // Sample the opponent's reply consistent with our own action, then the
    // next percept and our next action from the prior.
    Matrix op = nn::SoftmaxRows(ObsLogits(params, s));
    std::vector<nn::Token> percept(m);
    for (int r = 0; r < m; ++r) {
      const auto own = static_cast<Action>(toks[r].action);
      const int oc = static_cast<int>(EncodeObservation(own, Action::kCooperate));
      const int od = static_cast<int>(EncodeObservation(own, Action::kDefect));
      const double z = op(r, oc) + op(r, od);
      const double p_coop = z > 0.0 ? op(r, oc) / z : 0.5;
      const Action other = rngs[r / per_row]->Uniform() < p_coop ? Action::kCooperate
                                                                  : Action::kDefect;
      percept[r].obs = static_cast<int>(EncodeObservation(own, other));
      percept[r].reward = rhat(r);
    }
    hm = Advance(params, percept, hm);
    Matrix prior = nn::SoftmaxRows(ActionLogits(params, nn::SwishRows(hm)));
    for (int r = 0; r < m; ++r) {
      toks[r].action = rngs[r / per_row]->Uniform() < prior(r, 0) ? 0 : 1;
    }
  }
  std::vector<std::array<double, 2>> out(rows);
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < 2; ++c) {
      double sum = 0.0;
      for (int j = 0; j < k; ++j) sum += q[i * per_row + c * k + j];
      out[i][c] = sum / k;
    }
  }
  return out;
}

namespace {

class PpiSession : public BatchSession {
 public:
  PpiSession(const ModelParams& params, const PpiConfig& cfg, DecisionStats* stats,
             std::span<const std::vector<double>* const> conditioning, const EpisodeConfig& ecfg)
      : params_(params), cfg_(cfg), stats_(stats), horizon_(ecfg.horizon),
        h_(Matrix::Zero(static_cast<Eigen::Index>(conditioning.size()), params.arch().hidden_dim)) {
    cond_.reserve(conditioning.size());
    for (const auto* c : conditioning) {
      if (c != nullptr && c->size() != static_cast<std::size_t>(nn::kConditioningDim)) {
        throw ContractError("conditioning vector must have 10 entries");
      }
      cond_.push_back(c);
    }
  }

  void Act(std::span<const Trajectory* const> histories, std::span<const Observation> current,
           std::span<RandomStream* const> rngs, std::span<ActionDist> out) override {
    const std::size_t n = histories.size();
    if (n != cond_.size()) throw ContractError("PpiSession: row count changed");
    const int t = static_cast<int>(histories[0]->size());
    if (t == 0) {
      h_.setZero();
      bool any = std::any_of(cond_.begin(), cond_.end(), [](auto* c) { return c != nullptr; });
      if (any) {
        static const std::vector<double> kZero(nn::kConditioningDim, 0.0);
        std::vector<nn::Token> toks(n);
        for (std::size_t i = 0; i < n; ++i) {
          toks[i].cond = cond_[i] != nullptr ? cond_[i]->data() : kZero.data();
        }
        h_ = Advance(params_, toks, h_);
      }
    } else {
      std::vector<nn::Token> act(n);
      for (std::size_t i = 0; i < n; ++i) {
        act[i].action = static_cast<int>(histories[i]->steps.back().action);
      }
      h_ = Advance(params_, act, h_);
    }
    std::vector<nn::Token> percept(n);
    for (std::size_t i = 0; i < n; ++i) {
      percept[i].obs = static_cast<int>(current[i]);
      if (t > 0) percept[i].reward = histories[i]->steps.back().reward;
    }
    h_ = Advance(params_, percept, h_);
    Matrix prior = nn::SoftmaxRows(ActionLogits(params_, nn::SwishRows(h_)));

    std::vector<std::array<double, 2>> q;
    if (cfg_.beta != 0.0 || stats_ != nullptr) {
      std::vector<int> remaining(n, horizon_ - t);
      q = RolloutQ(params_, h_, remaining, cfg_, rngs);
    }
    for (std::size_t i = 0; i < n; ++i) {
      ActionDist p{prior(i, 0), prior(i, 1)};
      out[i] = cfg_.beta == 0.0 ? p : ImprovedPolicy(p, q[i], cfg_.beta);
      if (stats_ != nullptr) Record(p, out[i], q[i]);
    }
  }

 private:
  void Record(const ActionDist& prior, const ActionDist& pi, const std::array<double, 2>& q) {
    stats_->kl_sum += KlDivergence(pi, prior);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int a = 0; a < 2; ++a) {
      if (pi[a] > stats_->support_threshold) {
        lo = std::min(lo, q[a]);
        hi = std::max(hi, q[a]);
      }
    }
    stats_->flatness_sum += hi > lo ? hi - lo : 0.0;
    stats_->prior_coop_sum += prior[0];
    stats_->improved_coop_sum += pi[0];
    stats_->count += 1;
  }

  const ModelParams& params_;
  const PpiConfig& cfg_;
  DecisionStats* stats_;
  int horizon_;
  Matrix h_;
  std::vector<const std::vector<double>*> cond_;
};

}  // namespace

PpiAgent::PpiAgent(ModelParams params, PpiConfig cfg)
    : params_(std::move(params)), cfg_(std::move(cfg)) {
  if (!(params_.arch() == cfg_.arch)) {
    throw ContractError("PpiAgent: parameters do not match the configured architecture");
  }
}

std::unique_ptr<BatchSession> PpiAgent::NewSession(
    std::span<const std::vector<double>* const> conditioning, const EpisodeConfig& cfg) const {
  return std::make_unique<PpiSession>(params_, cfg_, stats_, conditioning, cfg);
}

Matrix EncodeHistory(const ModelParams& params, const Trajectory& history, Observation current) {
  Matrix h = Matrix::Zero(1, params.arch().hidden_dim);
  std::vector<nn::Token> tok(1);
  if (!history.conditioning.empty()) {
    tok[0].cond = history.conditioning.data();
    h = Advance(params, tok, h);
    tok[0] = nn::Token{};
  }
  for (std::size_t t = 0; t <= history.size(); ++t) {
    tok[0] = nn::Token{};
    tok[0].obs = static_cast<int>(t < history.size() ? history.steps[t].observation : current);
    if (t > 0) tok[0].reward = history.steps[t - 1].reward;
    h = Advance(params, tok, h);
    if (t == history.size()) break;
    tok[0] = nn::Token{};
    tok[0].action = static_cast<int>(history.steps[t].action);
    h = Advance(params, tok, h);
  }
  return h;
}

ActionDist PriorPolicy(const ModelParams& params, const Trajectory& history, Observation current) {
  Matrix h = EncodeHistory(params, history, current);
  Matrix p = nn::SoftmaxRows(ActionLogits(params, nn::SwishRows(h)));
  return {p(0, 0), p(0, 1)};
}

double EstimateQ(const ModelParams& params, const Trajectory& history, Observation current,
                 Action candidate, int horizon, const PpiConfig& cfg, RandomStream& rng) {
  Matrix h = EncodeHistory(params, history, current);
  int remaining[1] = {horizon - static_cast<int>(history.size())};
  RandomStream* r[1] = {&rng};
  return RolloutQ(params, h, remaining, cfg, r)[0][static_cast<int>(candidate)];
}

ActionDist ImprovedPolicyAt(const ModelParams& params, const Trajectory& history,
                            Observation current, int horizon, const PpiConfig& cfg,
                            RandomStream& rng) {
  Matrix h = EncodeHistory(params, history, current);
  Matrix p = nn::SoftmaxRows(ActionLogits(params, nn::SwishRows(h)));
  ActionDist prior{p(0, 0), p(0, 1)};
  if (cfg.beta == 0.0) return prior;
  int remaining[1] = {horizon - static_cast<int>(history.size())};
  RandomStream* r[1] = {&rng};
  return ImprovedPolicy(prior, RolloutQ(params, h, remaining, cfg, r)[0], cfg.beta);
}

PpiRunResult RunPpi(std::vector<TrajectoryDataset> initial, const PpiConfig& cfg,
                    const PpiCollector& collect, RandomStream& rng, const MetricsContext& ctx,
                    const PpiRunOptions& options) {
  Validate(cfg);
  const int n_learners = static_cast<int>(initial.size());
  if (n_learners < 1) throw ContractError("RunPpi: at least one learner");
  PpiRunResult res;
  res.datasets = std::move(initial);
  auto train = [&](int learner, int phase) {
    RandomStream tr = rng.Derive(static_cast<std::uint64_t>(1000 * phase + learner));
    TrainResult t = TrainSequenceModel(res.datasets[learner], cfg, tr);
    const std::string suffix = "_learner" + std::to_string(learner);
    if (!t.epoch_loss.empty()) {
      res.metrics.push_back(ctx.Row(phase, -1, "train_loss" + suffix, t.epoch_loss.back()));
    }
    res.metrics.push_back(ctx.Row(phase, -1, "dataset_size" + suffix,
                                  static_cast<double>(res.datasets[learner].size())));
    return std::move(t.params);
  };

  if (!options.initial_params.empty()) {
    if (static_cast<int>(options.initial_params.size()) != n_learners) {
      throw ContractError("RunPpi: one initial model per learner");
    }
    res.params = options.initial_params;
  } else {
    for (int i = 0; i < n_learners; ++i) res.params.push_back(train(i, 0));
  }
  if (options.on_phase) options.on_phase(0, res.params, res.metrics);

  for (int phase = 1; phase <= cfg.n_phases; ++phase) {
    std::vector<std::unique_ptr<PpiAgent>> agents;
    std::vector<PpiAgent*> ptrs;
    for (int i = 0; i < n_learners; ++i) {
      agents.push_back(std::make_unique<PpiAgent>(res.params[i], cfg));
      ptrs.push_back(agents.back().get());
    }
    RandomStream cr = rng.Derive(1'000'000ULL + static_cast<std::uint64_t>(phase));
    auto fresh = collect(phase, ptrs, cr, res.metrics);
    if (static_cast<int>(fresh.size()) != n_learners) {
      throw ContractError("collector must return one trajectory list per learner");
    }
    for (int i = 0; i < n_learners; ++i) res.datasets[i].Append(fresh[i], phase);
    for (int i = 0; i < n_learners; ++i) res.params[i] = train(i, phase);
    if (options.on_phase) options.on_phase(phase, res.params, res.metrics);
  }
  return res;
}

}  // namespace ipd
