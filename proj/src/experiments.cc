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

#include "ipd/experiments.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "ipd/a2c.h"
#include "ipd/error.h"
#include "ipd/nn/checkpoint.h"
#include "ipd/population.h"
#include "ipd/tabular.h"

namespace ipd {

namespace fs = std::filesystem;

double CooperationRate(const Trajectory& t, int begin, int end) {
  if (begin < 0 || end > static_cast<int>(t.size()) || begin >= end) {
    throw ContractError("cooperation window [" + std::to_string(begin) + "," +
                        std::to_string(end) + ") is empty or outside the episode");
  }
  int c = 0;
  for (int i = begin; i < end; ++i) c += t.steps[i].action == Action::kCooperate;
  return static_cast<double>(c) / (end - begin);
}

double FinalQuarterReward(const Trajectory& t) {
  const int T = static_cast<int>(t.size());
  const int begin = T - std::max(1, T / 4);
  double s = 0.0;
  for (int i = begin; i < T; ++i) s += t.steps[i].reward;
  return s / (T - begin);
}

EquilibriumReport EquilibriumCheck(const nn::ModelParams& params,
                                   std::span<const Trajectory> trajectories, const PpiConfig& cfg,
                                   int horizon, RandomStream& rng, double support_threshold) {
  EquilibriumReport rep;
  rep.support_threshold = support_threshold;
  if (trajectories.empty()) return rep;
  const std::size_t n = trajectories.size();
  const int T = static_cast<int>(trajectories[0].size());
  const bool cond = !trajectories[0].conditioning.empty();
  for (const auto& t : trajectories) {
    if (static_cast<int>(t.size()) != T || t.conditioning.empty() == cond) {
      throw ContractError("equilibrium check needs trajectories of one shape");
    }
  }
  if (T > horizon) throw ContractError("trajectory longer than the horizon");

  std::vector<RandomStream> streams;
  for (std::size_t i = 0; i < n; ++i) streams.push_back(rng.Derive(i));
  std::vector<RandomStream*> ptrs;
  for (auto& s : streams) ptrs.push_back(&s);

  auto advance = [&](const std::vector<nn::Token>& toks, const nn::Matrix& h) {
    return nn::GruCell(params, nn::EmbedBatch(params, toks), h);
  };
  nn::Matrix h = nn::Matrix::Zero(static_cast<Eigen::Index>(n), params.arch().hidden_dim);
  std::vector<nn::Token> toks(n);
  if (cond) {
    for (std::size_t i = 0; i < n; ++i) toks[i].cond = trajectories[i].conditioning.data();
    h = advance(toks, h);
  }
  double kl = 0.0, flat = 0.0;
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        toks[i] = nn::Token{};
        toks[i].action = static_cast<int>(trajectories[i].steps[t - 1].action);
      }
      h = advance(toks, h);
    }
    for (std::size_t i = 0; i < n; ++i) {
      toks[i] = nn::Token{};
      toks[i].obs = static_cast<int>(trajectories[i].steps[t].observation);
      if (t > 0) toks[i].reward = trajectories[i].steps[t - 1].reward;
    }
    h = advance(toks, h);
    nn::Matrix prior = nn::SoftmaxRows(nn::Heads(params, nn::SwishRows(h)).action_logits);
    std::vector<int> remaining(n, horizon - t);
    auto q = RolloutQ(params, h, remaining, cfg, ptrs);
    for (std::size_t i = 0; i < n; ++i) {
      ActionDist p{prior(i, 0), prior(i, 1)};
      ActionDist pi = ImprovedPolicy(p, q[i], cfg.beta);
      kl += KlDivergence(pi, p);
      double lo = INFINITY, hi = -INFINITY;
      for (int a = 0; a < 2; ++a) {
        if (pi[a] > support_threshold) {
          lo = std::min(lo, q[i][a]);
          hi = std::max(hi, q[i][a]);
        }
      }
      flat += hi > lo ? hi - lo : 0.0;
    }
  }
  rep.steps = static_cast<std::int64_t>(n) * T;
  rep.on_path_action_kl = kl / rep.steps;
  rep.q_flatness = flat / rep.steps;
  return rep;
}

std::vector<StrategyEval> EvaluateVsStrategies(const Agent& agent,
                                               const std::vector<std::string>& strategies,
                                               int episodes, const EpisodeConfig& cfg,
                                               RandomStream& rng) {
  if (episodes < 1) throw ContractError("evaluation needs at least one episode");
  std::vector<StrategyEval> out;
  const Agent* agents[1] = {&agent};
  for (std::size_t k = 0; k < strategies.size(); ++k) {
    const TabularPolicy opp = NamedTabular(strategies[k]);
    std::vector<Matchup> ms(episodes);
    std::vector<RandomStream> rs;
    for (int e = 0; e < episodes; ++e) {
      ms[e].first.agent = 0;
      ms[e].second.tabular = opp;
      rs.push_back(rng.Derive(k * static_cast<std::uint64_t>(episodes) + e));
    }
    auto res = PlayLockstep(ms, agents, cfg, rs);
    StrategyEval ev;
    ev.strategy = strategies[k];
    ev.reward_curve.assign(cfg.horizon, 0.0);
    ev.coop_curve.assign(cfg.horizon, 0.0);
    for (const auto& [mine, theirs] : res) {
      ev.final_quarter_reward += FinalQuarterReward(mine);
      ev.mean_return += mine.Return();
      for (int t = 0; t < cfg.horizon; ++t) {
        ev.reward_curve[t] += mine.steps[t].reward;
        ev.coop_curve[t] += mine.steps[t].action == Action::kCooperate;
      }
    }
    ev.final_quarter_reward /= episodes;
    ev.mean_return /= episodes;
    for (int t = 0; t < cfg.horizon; ++t) {
      ev.reward_curve[t] /= episodes;
      ev.coop_curve[t] /= episodes;
    }
    ev.oracle_per_round = BestResponse(opp, cfg, 1.0).br_value / cfg.horizon;
    out.push_back(std::move(ev));
  }
  return out;
}

std::string RunDirectory(const RunConfig& cfg, std::uint64_t seed) {
  return (fs::path(ResolveOutRoot(cfg)) / ExperimentKindName(cfg.experiment.kind) /
          AlgorithmName(cfg.experiment.algorithm) / std::to_string(seed))
      .string();
}

double FinalMean(const std::vector<MetricsRow>& rows, const std::string& metric,
                 double fraction) {
  std::map<std::int64_t, double> by_outer;
  for (const auto& r : rows) {
    if (r.metric == metric && r.inner == -1) by_outer[r.outer] = r.value;
  }
  if (by_outer.empty()) throw ContractError("no rows for metric '" + metric + "'");
  const std::size_t k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * by_outer.size() - 1e-9)));
  double s = 0.0;
  std::size_t i = 0;
  for (auto it = by_outer.rbegin(); it != by_outer.rend() && i < k; ++it, ++i) s += it->second;
  return s / k;
}

namespace {

std::vector<double> Ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double Spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("Spearman needs two equal series");
  auto rx = Ranks(x), ry = Ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

TrajectoryDataset BuildInitialDataset(const RunConfig& cfg, std::uint64_t seed) {
  RandomStream rng = RandomStream(seed).Derive(1);
  const PoolConfig pool = ResolvePool(cfg);
  const int n = cfg.ppi.n_pretrain_trajectories;
  if (pool.ablation == Ablation::kNoTabular) return NoTabularPretrainSource(n, cfg.episode, rng);
  return BuildPretrainDataset(n, cfg.episode, rng, pool.ablation == Ablation::kOpponentId);
}

namespace {

// Exclusive ownership of a run directory for the lifetime of the object.
class RunLock {
 public:
  explicit RunLock(const std::string& dir) : path_((fs::path(dir) / "LOCK").string()) {
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      throw PreconditionError("run directory is locked: " + path_ +
                              " exists (another run is writing here, or remove it if stale)");
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto w = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::string path_;
};

class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
    out_ << kMetricsHeader << '\n';
    out_.flush();
  }

  void Add(const MetricsRow& r) {
    rows_.push_back(r);
    out_ << FormatMetricsRow(r) << '\n';
  }
  void Add(const std::vector<MetricsRow>& rs) {
    for (const auto& r : rs) Add(r);
    Flush();
  }
  // Writes the rows of `all` not seen yet (for vectors that only grow).
  void Sync(const std::vector<MetricsRow>& all) {
    for (; synced_ < all.size(); ++synced_) Add(all[synced_]);
    Flush();
  }
  void Flush() {
    out_.flush();
    if (!out_) throw IoError("failed writing metrics");
  }
  const std::vector<MetricsRow>& rows() const { return rows_; }

 private:
  std::ofstream out_;
  std::vector<MetricsRow> rows_;
  std::size_t synced_ = 0;
};

class PairingLog {
 public:
  PairingLog(const std::string& path, bool enabled) {
    if (!enabled) return;
    out_.open(path, std::ios::trunc);
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
    out_ << "outer,episode,kind,focal,opponent,p_start,p_cc,p_cd,p_dc,p_dd\n";
  }
  void Write(int outer, std::size_t episode, const Matchup& m) {
    if (out_.is_open()) out_ << outer << ',' << episode << ',' << DescribeMatchup(m) << '\n';
  }
  void Flush() {
    if (out_.is_open()) out_.flush();
  }

 private:
  std::ofstream out_;
};

struct Collected {
  std::vector<std::vector<Trajectory>> per_learner;
  std::vector<double> coop, coop_n, ret, ret_n;
  double ll_coop = 0.0, ll_n = 0.0;
  std::vector<std::pair<Trajectory, Trajectory>> episodes;
  std::vector<Matchup> matchups;

  explicit Collected(std::size_t learners)
      : per_learner(learners), coop(learners), coop_n(learners), ret(learners), ret_n(learners) {}

  void Seat(int learner, const Trajectory& t, bool ll) {
    double c = 0;
    for (const auto& s : t.steps) c += s.action == Action::kCooperate;
    coop[learner] += c;
    coop_n[learner] += t.size();
    ret[learner] += t.Return();
    ret_n[learner] += 1;
    if (ll) {
      ll_coop += c;
      ll_n += t.size();
    }
  }
};

// Plays the given matchups and routes each learner seat's trajectory to
// that learner. Tabular seats are kept only with tabular_both_perspectives,
// routed to the focal learner.
Collected Play(std::vector<Matchup> matchups, std::vector<RandomStream> streams,
               std::span<const Agent* const> learners, const PoolConfig& pool,
               const EpisodeConfig& ecfg, bool keep_episodes) {
  Collected c(learners.size());
  auto res = PlayLockstep(matchups, learners, ecfg, streams);
  for (std::size_t e = 0; e < res.size(); ++e) {
    const Matchup& m = matchups[e];
    const bool ll = IsLearnerMatch(m);
    c.Seat(m.first.agent, res[e].first, ll);
    c.per_learner[m.first.agent].push_back(res[e].first);
    if (m.second.agent >= 0) {
      c.Seat(m.second.agent, res[e].second, ll);
      c.per_learner[m.second.agent].push_back(res[e].second);
    } else if (pool.tabular_both_perspectives) {
      Trajectory t = res[e].second;
      if (pool.ablation == Ablation::kOpponentId) t.conditioning = LearnerConditioningVector();
      c.per_learner[m.first.agent].push_back(std::move(t));
    }
  }
  if (keep_episodes) {
    c.episodes = std::move(res);
    c.matchups = std::move(matchups);
  }
  return c;
}

// Every learner plays `n` focal episodes drawn from the pool.
Collected CollectPool(std::span<const Agent* const> learners, const PoolConfig& pool,
                      const EpisodeConfig& ecfg, int n, RandomStream& rng, PairingLog* log,
                      int outer) {
  std::vector<Matchup> ms;
  std::vector<RandomStream> rs;
  for (std::size_t i = 0; i < learners.size(); ++i) {
    for (int e = 0; e < n; ++e) {
      RandomStream er = rng.Derive(i * static_cast<std::uint64_t>(n) + e);
      ms.push_back(SampleMatchup(pool, static_cast<int>(i), er));
      rs.push_back(er);
      if (log) log->Write(outer, ms.size() - 1, ms.back());
    }
  }
  if (log) log->Flush();
  return Play(std::move(ms), std::move(rs), learners, pool, ecfg, false);
}

// n episodes with seat 0 = agent `a`, seat 1 = agent `b`.
Collected CollectPairs(std::span<const Agent* const> learners, int a, int b, const PoolConfig& pool,
                       const EpisodeConfig& ecfg, int n, RandomStream& rng, PairingLog* log,
                       int outer, bool keep_episodes = false) {
  std::vector<Matchup> ms(n);
  std::vector<RandomStream> rs;
  for (int e = 0; e < n; ++e) {
    ms[e].first.agent = a;
    ms[e].second.agent = b;
    rs.push_back(rng.Derive(e));
    if (log) log->Write(outer, e, ms[e]);
  }
  if (log) log->Flush();
  return Play(std::move(ms), std::move(rs), learners, pool, ecfg, keep_episodes);
}

class Experiment {
 public:
  Experiment(const RunConfig& cfg, std::uint64_t seed, const RunHooks& hooks)
      : cfg_(cfg),
        seed_(seed),
        hooks_(hooks),
        dir_(RunDirectory(cfg, seed)),
        pool_(ResolvePool(cfg)),
        arch_(ResolveArch(cfg)),
        ctx_{ExperimentKindName(cfg.experiment.kind), AlgorithmName(cfg.experiment.algorithm),
             seed},
        master_(seed) {
    ppi_ = cfg.ppi;
    ppi_.arch = arch_;
  }

  RunOutput Run() {
    Validate(cfg_);
    const std::clock_t cpu0 = std::clock();
    const auto wall0 = std::chrono::steady_clock::now();
    fs::create_directories(dir_);
    RunLock lock(dir_);
    fs::remove(Path("COMPLETE"));
    WriteConfig();
    writer_ = std::make_unique<MetricsWriter>(Path("metrics.csv"));
    pairings_ = std::make_unique<PairingLog>(Path("pairings.csv"), cfg_.experiment.log_pairings);
    Log(std::string("run ") + ctx_.experiment + " " + ctx_.algorithm + " seed " +
        std::to_string(seed_) + " -> " + dir_);
    const bool ppi = cfg_.experiment.algorithm == Algorithm::kPpi;
    switch (cfg_.experiment.kind) {
      case ExperimentKind::kStep1BestResponse:
        ppi ? PpiStep1() : A2cStep1();
        break;
      case ExperimentKind::kStep2Extortion:
        ppi ? PpiStep2() : A2cStep2();
        break;
      case ExperimentKind::kStep3MutualExtortion:
        ppi ? PpiStep3() : A2cStep3();
        break;
      case ExperimentKind::kMixedTraining:
      case ExperimentKind::kAblationOpponentId:
      case ExperimentKind::kAblationNoTabular:
        ppi ? PpiMixed() : A2cMixed();
        break;
      case ExperimentKind::kEquilibriumCheck:
        Equilibrium();
        break;
      case ExperimentKind::kEvalVsFixed:
        EvalCheckpoint();
        break;
    }
    CheckUniqueKeys(writer_->rows());
    // Timing goes to run.json only; metrics stay bit-reproducible.
    const double cpu = static_cast<double>(std::clock() - cpu0) / CLOCKS_PER_SEC;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    WriteRunInfo(cpu, wall);
    std::ofstream(Path("COMPLETE")) << "ok\n";
    return {dir_, writer_->rows()};
  }

 private:
  std::string Path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

  void Log(const std::string& msg) const {
    if (hooks_.log) hooks_.log(msg);
  }

  void CheckStop() const {
    if (hooks_.should_stop && hooks_.should_stop()) {
      throw InterruptedError("interrupted; partial results are in " + dir_);
    }
  }

  void WriteConfig() const {
    RunConfig echo = cfg_;
    echo.seeds = {seed_};
    std::ofstream out(Path("config.json"), std::ios::trunc);
    out << RunConfigToJson(echo) << '\n';
    if (!out) throw IoError("cannot write the run configuration to " + dir_);
    WriteRunInfo(-1.0, -1.0);
  }

  void WriteRunInfo(double cpu_seconds, double wall_seconds) const {
    std::ofstream ver(Path("run.json"), std::ios::trunc);
    ver << "{\"tool\": \"ipdsim\", \"version\": \"" << IPD_VERSION << "\", \"seed\": " << seed_;
    if (cpu_seconds >= 0.0) {
      ver << ", \"cpu_seconds\": " << cpu_seconds << ", \"wall_seconds\": " << wall_seconds;
    }
    ver << "}\n";
    if (!ver) throw IoError("cannot write run.json in " + dir_);
  }

  // Checkpoint of an earlier run: explicit path, else the same seed's run of
  // `kind` under the output root.
  std::string InputCheckpoint(const std::string& explicit_path, ExperimentKind kind,
                              const std::string& file, const std::string& what) const {
    std::string path = explicit_path;
    if (path.empty()) {
      RunConfig other = cfg_;
      other.experiment.kind = kind;
      path = (fs::path(RunDirectory(other, seed_)) / file).string();
    }
    if (!fs::exists(path)) {
      throw PreconditionError("missing " + what + " checkpoint '" + path + "' (run " +
                              ExperimentKindName(kind) + " first or set the path)");
    }
    return path;
  }

  nn::ModelParams LoadMatching(const std::string& path) const {
    nn::ModelParams p = nn::LoadCheckpoint(path);
    if (!(p.arch() == arch_)) {
      throw ContractError("checkpoint '" + path + "' has hidden " +
                          std::to_string(p.arch().hidden_dim) + ", embed " +
                          std::to_string(p.arch().embed_dim) + ", conditioning " +
                          std::to_string(p.arch().conditioning_dim) +
                          " but the configuration expects hidden " +
                          std::to_string(arch_.hidden_dim) + ", embed " +
                          std::to_string(arch_.embed_dim) + ", conditioning " +
                          std::to_string(arch_.conditioning_dim));
    }
    return p;
  }

  void EmitCollected(std::int64_t outer, const Collected& c, std::vector<MetricsRow>& out) const {
    for (std::size_t i = 0; i < c.per_learner.size(); ++i) {
      if (c.ret_n[i] == 0) continue;
      const std::string sfx = "_learner" + std::to_string(i);
      out.push_back(ctx_.Row(outer, -1, "coop_rate" + sfx, c.coop[i] / c.coop_n[i]));
      out.push_back(ctx_.Row(outer, -1, "mean_return" + sfx, c.ret[i] / c.ret_n[i]));
    }
    if (c.ll_n > 0) out.push_back(ctx_.Row(outer, -1, "ll_coop_rate", c.ll_coop / c.ll_n));
  }

  void EmitEval(std::int64_t outer, const std::vector<StrategyEval>& evs,
                std::vector<MetricsRow>& out) const {
    for (const auto& ev : evs) {
      const std::string p = "eval_" + ev.strategy;
      out.push_back(ctx_.Row(outer, -1, p + "_final_quarter_reward", ev.final_quarter_reward));
      out.push_back(ctx_.Row(outer, -1, p + "_mean_return", ev.mean_return));
      out.push_back(ctx_.Row(outer, -1, "oracle_" + ev.strategy + "_per_round",
                             ev.oracle_per_round));
      for (std::size_t t = 0; t < ev.reward_curve.size(); ++t) {
        out.push_back(ctx_.Row(outer, t, p + "_reward", ev.reward_curve[t]));
        out.push_back(ctx_.Row(outer, t, p + "_coop", ev.coop_curve[t]));
      }
    }
  }

  // Within-episode cooperation of learner 0 vs learner 1 (both seats).
  void EmitLearnerCurves(const std::string& tag, std::int64_t outer,
                         std::span<const Agent* const> agents, RandomStream rng) {
    const int n = cfg_.experiment.eval_episodes;
    const int T = cfg_.episode.horizon;
    const int other = agents.size() > 1 ? 1 : 0;
    Collected c = CollectPairs(agents, 0, other, pool_, cfg_.episode, n, rng, nullptr, -1, true);
    std::vector<double> curve(T, 0.0);
    double first = 0.0, last = 0.0;
    const int q = std::max(1, T / 4);
    for (const auto& [a, b] : c.episodes) {
      for (int t = 0; t < T; ++t) {
        curve[t] += 0.5 * ((a.steps[t].action == Action::kCooperate) +
                           (b.steps[t].action == Action::kCooperate));
      }
      first += 0.5 * (CooperationRate(a, 0, q) + CooperationRate(b, 0, q));
      last += 0.5 * (CooperationRate(a, T - q, T) + CooperationRate(b, T - q, T));
    }
    std::vector<MetricsRow> rows;
    for (int t = 0; t < T; ++t) rows.push_back(ctx_.Row(outer, t, tag + "_ll_coop", curve[t] / n));
    rows.push_back(ctx_.Row(outer, -1, tag + "_ll_coop_rate", c.ll_coop / c.ll_n));
    rows.push_back(ctx_.Row(outer, -1, tag + "_ll_coop_first_quarter", first / n));
    rows.push_back(ctx_.Row(outer, -1, tag + "_ll_coop_last_quarter", last / n));
    writer_->Add(rows);
  }

  // ------------------------------------------------------------------ PPI

  struct PpiStart {
    TrajectoryDataset data;
    nn::ModelParams params;
  };

  PpiStart PpiPretrain() {
    PpiStart s;
    if (!cfg_.paths.pretrain_dataset.empty()) {
      s.data = TrajectoryDataset::Load(cfg_.paths.pretrain_dataset);
      Log("loaded D_0 from " + cfg_.paths.pretrain_dataset);
    } else {
      s.data = BuildInitialDataset(cfg_, seed_);
    }
    Log("pretraining on " + std::to_string(s.data.size()) + " trajectories");
    RandomStream tr = master_.Derive(2);
    TrainResult t = TrainSequenceModel(s.data, ppi_, tr);
    s.params = std::move(t.params);
    std::vector<MetricsRow> rows;
    if (!t.epoch_loss.empty()) rows.push_back(ctx_.Row(0, -1, "pretrain_loss", t.epoch_loss.back()));
    rows.push_back(ctx_.Row(0, -1, "pretrain_dataset_size", static_cast<double>(s.data.size())));
    writer_->Add(rows);
    CheckStop();
    return s;
  }

  PpiRunOptions PpiOptions(std::vector<nn::ModelParams> initial, bool save_phases) {
    PpiRunOptions o;
    o.initial_params = std::move(initial);
    o.on_phase = [this, save_phases](int phase, const std::vector<nn::ModelParams>& ps,
                                     const std::vector<MetricsRow>& rows) {
      writer_->Sync(rows);
      if (save_phases) {
        for (std::size_t i = 0; i < ps.size(); ++i) {
          nn::SaveCheckpoint(ps[i], Path("phase_" + std::to_string(phase) + "_learner" +
                                         std::to_string(i) + ".ckpt"));
        }
      }
      Log("phase " + std::to_string(phase) + " done");
      CheckStop();
    };
    return o;
  }

  // Turns on decision statistics for a collection and emits them.
  struct StatsScope {
    std::vector<DecisionStats> stats;
    std::span<PpiAgent* const> agents;
    explicit StatsScope(std::span<PpiAgent* const> a) : stats(a.size()), agents(a) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i]->set_stats(&stats[i]);
    }
    ~StatsScope() {
      for (auto* a : agents) a->set_stats(nullptr);
    }
    void Emit(const MetricsContext& ctx, std::int64_t outer, std::vector<MetricsRow>& out) const {
      double kl = 0.0, flat = 0.0, n = 0.0;
      for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& s = stats[i];
        if (s.count == 0) continue;
        const std::string sfx = "_learner" + std::to_string(i);
        out.push_back(ctx.Row(outer, -1, "on_path_action_kl" + sfx, s.mean_kl()));
        out.push_back(ctx.Row(outer, -1, "q_flatness" + sfx, s.mean_flatness()));
        out.push_back(ctx.Row(outer, -1, "prior_coop" + sfx, s.prior_coop_sum / s.count));
        kl += s.kl_sum;
        flat += s.flatness_sum;
        n += static_cast<double>(s.count);
      }
      if (n > 0) {
        out.push_back(ctx.Row(outer, -1, "on_path_action_kl", kl / n));
        out.push_back(ctx.Row(outer, -1, "q_flatness", flat / n));
      }
    }
  };

  static std::vector<const Agent*> AsAgents(std::span<PpiAgent* const> a) {
    return {a.begin(), a.end()};
  }

  void SaveFinal(const PpiRunResult& res, bool datasets) {
    for (std::size_t i = 0; i < res.params.size(); ++i) {
      nn::SaveCheckpoint(res.params[i], Path("final_learner" + std::to_string(i) + ".ckpt"));
      if (datasets) res.datasets[i].Save(Path("dataset_learner" + std::to_string(i) + ".jsonl"));
    }
  }

  void PpiStep1() {
    PpiStart s = PpiPretrain();
    PpiCollector collect = [&](int phase, std::span<PpiAgent* const> learners, RandomStream& rng,
                               std::vector<MetricsRow>& rows) {
      StatsScope scope(learners);
      auto agents = AsAgents(learners);
      Collected c = CollectPool(agents, pool_, cfg_.episode, ppi_.n_samples_per_phase, rng,
                                pairings_.get(), phase);
      EmitCollected(phase, c, rows);
      scope.Emit(ctx_, phase, rows);
      return std::move(c.per_learner);
    };
    RandomStream rng = master_.Derive(3);
    std::vector<TrajectoryDataset> init{std::move(s.data)};
    PpiRunResult res = RunPpi(std::move(init), ppi_, collect, rng, ctx_,
                              PpiOptions({s.params}, true));
    writer_->Sync(res.metrics);
    SaveFinal(res, cfg_.experiment.save_datasets);
    nn::SaveCheckpoint(res.params[0], Path("fixed_icl.ckpt"));
    PpiAgent agent(res.params[0], ppi_);
    RandomStream er = master_.Derive(4);
    std::vector<MetricsRow> rows;
    EmitEval(ppi_.n_phases, EvaluateVsStrategies(agent, cfg_.experiment.eval_strategies,
                                                 cfg_.experiment.eval_episodes, cfg_.episode, er),
             rows);
    writer_->Add(rows);
  }

  // Returns (mean gap, standard error) of learner minus fixed return.
  static std::pair<double, double> GapStats(const Collected& c) {
    std::vector<double> gaps;
    for (const auto& [a, b] : c.episodes) gaps.push_back(a.Return() - b.Return());
    const double n = static_cast<double>(gaps.size());
    const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / n;
    double ss = 0.0;
    for (double g : gaps) ss += (g - mean) * (g - mean);
    const double sd = gaps.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    return {mean, sd / std::sqrt(n)};
  }

  void EmitGap(const std::string& tag, std::int64_t outer, const Collected& c) {
    auto [gap, se] = GapStats(c);
    double lr = 0.0, fr = 0.0;
    for (const auto& [a, b] : c.episodes) {
      lr += a.Return();
      fr += b.Return();
    }
    const double n = static_cast<double>(c.episodes.size());
    writer_->Add({ctx_.Row(outer, -1, tag + "_learner_return", lr / n),
                  ctx_.Row(outer, -1, tag + "_fixed_return", fr / n),
                  ctx_.Row(outer, -1, tag + "_gap", gap),
                  ctx_.Row(outer, -1, tag + "_gap_se", se)});
  }

  void EmitStep2Collected(std::int64_t outer, const Collected& c, std::vector<MetricsRow>& rows) {
    double lr = 0.0, fr = 0.0;
    for (const auto& [a, b] : c.episodes) {
      lr += a.Return();
      fr += b.Return();
    }
    const double n = static_cast<double>(c.episodes.size());
    rows.push_back(ctx_.Row(outer, -1, "learner_return", lr / n));
    rows.push_back(ctx_.Row(outer, -1, "fixed_return", fr / n));
    rows.push_back(ctx_.Row(outer, -1, "return_gap", (lr - fr) / n));
    rows.push_back(ctx_.Row(outer, -1, "coop_rate_learner0", c.coop[0] / c.coop_n[0]));
  }

  void PpiStep2() {
    const std::string path = InputCheckpoint(cfg_.paths.fixed_icl, ExperimentKind::kStep1BestResponse,
                                             "fixed_icl.ckpt", "Fixed-ICL");
    const nn::ModelParams fixed_params = LoadMatching(path);
    const std::uint64_t before = fixed_params.Checksum();
    PpiAgent fixed(fixed_params, ppi_);
    PpiStart s = PpiPretrain();
    // Only the learner's own perspective is learned from.
    PoolConfig pool = pool_;
    pool.tabular_both_perspectives = false;
    {
      PpiAgent untrained(s.params, ppi_);
      const Agent* agents[2] = {&untrained, &fixed};
      RandomStream br = master_.Derive(5);
      EmitGap("baseline", 0,
              CollectPairs(agents, 0, 1, pool, cfg_.episode, cfg_.experiment.eval_episodes, br,
                           nullptr, -1, true));
    }
    PpiCollector collect = [&](int phase, std::span<PpiAgent* const> learners, RandomStream& rng,
                               std::vector<MetricsRow>& rows) {
      StatsScope scope(learners);
      const Agent* agents[2] = {learners[0], &fixed};
      Collected c = CollectPairs(agents, 0, 1, pool, cfg_.episode, ppi_.n_samples_per_phase, rng,
                                 pairings_.get(), phase, true);
      EmitStep2Collected(phase, c, rows);
      scope.Emit(ctx_, phase, rows);
      return std::vector<std::vector<Trajectory>>{std::move(c.per_learner[0])};
    };
    RandomStream rng = master_.Derive(3);
    std::vector<TrajectoryDataset> init{std::move(s.data)};
    PpiRunResult res = RunPpi(std::move(init), ppi_, collect, rng, ctx_,
                              PpiOptions({s.params}, true));
    writer_->Sync(res.metrics);
    SaveFinal(res, true);
    nn::SaveCheckpoint(res.params[0], Path("extorter.ckpt"));
    PpiAgent trained(res.params[0], ppi_);
    const Agent* agents[2] = {&trained, &fixed};
    RandomStream fr = master_.Derive(6);
    EmitGap("final", ppi_.n_phases,
            CollectPairs(agents, 0, 1, pool, cfg_.episode, cfg_.experiment.eval_episodes, fr,
                         nullptr, -1, true));
    if (fixed.params().Checksum() != before) throw ContractError("frozen Fixed-ICL was modified");
    writer_->Add({ctx_.Row(ppi_.n_phases, -1, "fixed_params_unchanged", 1.0)});
  }

  void PpiStep3() {
    const std::string path = InputCheckpoint(cfg_.paths.extorter, ExperimentKind::kStep2Extortion,
                                             "extorter.ckpt", "extorter");
    const nn::ModelParams ext = LoadMatching(path);
    const std::string data_path = (fs::path(path).parent_path() / "dataset_learner0.jsonl").string();
    if (!fs::exists(data_path)) {
      throw PreconditionError("missing extorter dataset '" + data_path + "'");
    }
    TrajectoryDataset data = TrajectoryDataset::Load(data_path);
    writer_->Add({ctx_.Row(0, -1, "initial_dataset_size", static_cast<double>(data.size()))});
    PpiCollector collect = [&](int phase, std::span<PpiAgent* const> learners, RandomStream& rng,
                               std::vector<MetricsRow>& rows) {
      auto agents = AsAgents(learners);
      if (phase == cfg_.experiment.early_phase) {
        EmitLearnerCurves("early", phase, agents, master_.Derive(7));
      }
      StatsScope scope(learners);
      Collected c = CollectPairs(agents, 0, 1, pool_, cfg_.episode, ppi_.n_samples_per_phase, rng,
                                 pairings_.get(), phase);
      EmitCollected(phase, c, rows);
      scope.Emit(ctx_, phase, rows);
      return std::move(c.per_learner);
    };
    RandomStream rng = master_.Derive(3);
    PpiRunResult res = RunPpi({data, data}, ppi_, collect, rng, ctx_, PpiOptions({ext, ext}, true));
    writer_->Sync(res.metrics);
    SaveFinal(res, cfg_.experiment.save_datasets);
    PpiAgent a(res.params[0], ppi_), b(res.params[1], ppi_);
    const Agent* agents[2] = {&a, &b};
    EmitLearnerCurves("final", ppi_.n_phases, agents, master_.Derive(8));
  }

  void PpiMixed() {
    PpiStart s = PpiPretrain();
    const int L = pool_.n_learners;
    PpiCollector collect = [&](int phase, std::span<PpiAgent* const> learners, RandomStream& rng,
                               std::vector<MetricsRow>& rows) {
      auto agents = AsAgents(learners);
      if (phase == cfg_.experiment.early_phase && L > 1) {
        EmitLearnerCurves("early", phase, agents, master_.Derive(7));
      }
      StatsScope scope(learners);
      Collected c = CollectPool(agents, pool_, cfg_.episode, ppi_.n_samples_per_phase, rng,
                                pairings_.get(), phase);
      EmitCollected(phase, c, rows);
      scope.Emit(ctx_, phase, rows);
      return std::move(c.per_learner);
    };
    RandomStream rng = master_.Derive(3);
    std::vector<TrajectoryDataset> init(L, s.data);
    std::vector<nn::ModelParams> start(L, s.params);
    PpiRunResult res = RunPpi(std::move(init), ppi_, collect, rng, ctx_,
                              PpiOptions(std::move(start), true));
    writer_->Sync(res.metrics);
    SaveFinal(res, cfg_.experiment.save_datasets);
    std::vector<std::unique_ptr<PpiAgent>> finals;
    std::vector<const Agent*> agents;
    for (const auto& p : res.params) {
      finals.push_back(std::make_unique<PpiAgent>(p, ppi_));
      agents.push_back(finals.back().get());
    }
    EmitLearnerCurves("final", ppi_.n_phases, agents, master_.Derive(8));
  }

  void Equilibrium() {
    if (cfg_.experiment.algorithm != Algorithm::kPpi) {
      throw ConfigError("equilibrium_check applies to PPI models only");
    }
    if (cfg_.paths.checkpoint.empty()) throw PreconditionError("paths.checkpoint is not set");
    if (!fs::exists(cfg_.paths.checkpoint)) {
      throw PreconditionError("missing checkpoint '" + cfg_.paths.checkpoint + "'");
    }
    nn::ModelParams params = LoadMatching(cfg_.paths.checkpoint);
    PpiAgent agent(params, ppi_);
    DecisionStats live;
    agent.set_stats(&live);
    PoolConfig pool = pool_;
    pool.n_learners = 1;
    if (pool.ablation == Ablation::kNoTabular) pool.ablation = Ablation::kNone, pool.learner_fraction = 1.0;
    const Agent* agents[1] = {&agent};
    RandomStream rng = master_.Derive(9);
    Collected c = CollectPool(agents, pool, cfg_.episode, cfg_.experiment.eval_episodes, rng,
                              nullptr, 0);
    agent.set_stats(nullptr);
    RandomStream qr = master_.Derive(10);
    EquilibriumReport rep = EquilibriumCheck(params, c.per_learner[0], ppi_, cfg_.episode.horizon, qr);
    writer_->Add({ctx_.Row(0, -1, "on_path_action_kl", rep.on_path_action_kl),
                  ctx_.Row(0, -1, "q_flatness", rep.q_flatness),
                  ctx_.Row(0, -1, "support_threshold", rep.support_threshold),
                  ctx_.Row(0, -1, "visited_steps", static_cast<double>(rep.steps)),
                  ctx_.Row(0, -1, "deployed_action_kl", live.mean_kl()),
                  ctx_.Row(0, -1, "deployed_q_flatness", live.mean_flatness())});
  }

  void EvalCheckpoint() {
    if (cfg_.paths.checkpoint.empty()) throw PreconditionError("paths.checkpoint is not set");
    if (!fs::exists(cfg_.paths.checkpoint)) {
      throw PreconditionError("missing checkpoint '" + cfg_.paths.checkpoint + "'");
    }
    nn::ModelParams params = LoadMatching(cfg_.paths.checkpoint);
    std::unique_ptr<Agent> agent;
    if (cfg_.experiment.algorithm == Algorithm::kPpi) {
      agent = std::make_unique<PpiAgent>(params, ppi_);
    } else {
      agent = std::make_unique<A2cAgent>(params);
    }
    RandomStream er = master_.Derive(4);
    std::vector<MetricsRow> rows;
    EmitEval(0, EvaluateVsStrategies(*agent, cfg_.experiment.eval_strategies,
                                     cfg_.experiment.eval_episodes, cfg_.episode, er),
             rows);
    writer_->Add(rows);
  }

  // ------------------------------------------------------------------ A2C

  bool LogIteration(int it) const {
    return it % cfg_.experiment.log_every == 0 || it + 1 == cfg_.a2c.iterations;
  }

  // Runs the iteration loop; `collect` returns per-learner data.
  void A2cLoop(std::vector<A2cLearner>& learners, const A2cCollector& collect,
               const std::function<void(int, std::span<const A2cAgent* const>)>& before = {}) {
    const A2cHyper h = ResolveA2c(cfg_);
    RandomStream rng = master_.Derive(3);
    for (int it = 0; it < cfg_.a2c.iterations; ++it) {
      if (before) {
        std::vector<A2cAgent> snaps;
        for (const auto& l : learners) snaps.emplace_back(l.params);
        std::vector<const A2cAgent*> ptrs;
        for (const auto& a : snaps) ptrs.push_back(&a);
        before(it, ptrs);
      }
      RandomStream ir = rng.Derive(it);
      auto rows = A2cTrainIteration(learners, it, collect, h, ir, ctx_);
      if (LogIteration(it)) {
        writer_->Add(rows);
        Log("iteration " + std::to_string(it));
      }
      if (cfg_.experiment.early_iteration == it) {
        for (std::size_t i = 0; i < learners.size(); ++i) {
          nn::SaveCheckpoint(learners[i].params,
                             Path("early_learner" + std::to_string(i) + ".ckpt"));
        }
      }
      CheckStop();
    }
    for (std::size_t i = 0; i < learners.size(); ++i) {
      nn::SaveCheckpoint(learners[i].params, Path("final_learner" + std::to_string(i) + ".ckpt"));
    }
  }

  std::vector<A2cLearner> FreshLearners(int n) {
    std::vector<A2cLearner> ls;
    for (int i = 0; i < n; ++i) {
      RandomStream r = master_.Derive(100 + i);
      ls.push_back(InitA2cLearner(arch_, r));
    }
    return ls;
  }

  void A2cStep1() {
    const A2cHyper h = ResolveA2c(cfg_);
    auto learners = FreshLearners(1);
    A2cCollector collect = [&](int it, std::span<const A2cAgent* const> ls, RandomStream& rng,
                               std::vector<MetricsRow>& rows) {
      std::vector<const Agent*> agents(ls.begin(), ls.end());
      Collected c = CollectPool(agents, pool_, cfg_.episode, h.batch_size, rng,
                                LogIteration(it) ? pairings_.get() : nullptr, it);
      if (LogIteration(it)) EmitCollected(it, c, rows);
      return std::move(c.per_learner);
    };
    A2cLoop(learners, collect);
    nn::SaveCheckpoint(learners[0].params, Path("fixed_icl.ckpt"));
    A2cAgent agent(learners[0].params);
    RandomStream er = master_.Derive(4);
    std::vector<MetricsRow> rows;
    EmitEval(cfg_.a2c.iterations, EvaluateVsStrategies(agent, cfg_.experiment.eval_strategies,
                                                       cfg_.experiment.eval_episodes,
                                                       cfg_.episode, er),
             rows);
    writer_->Add(rows);
  }

  void A2cStep2() {
    const A2cHyper h = ResolveA2c(cfg_);
    const std::string path = InputCheckpoint(cfg_.paths.fixed_icl, ExperimentKind::kStep1BestResponse,
                                             "fixed_icl.ckpt", "Fixed-ICL");
    const nn::ModelParams fixed_params = LoadMatching(path);
    const std::uint64_t before = fixed_params.Checksum();
    A2cAgent fixed(fixed_params);
    auto learners = FreshLearners(1);
    PoolConfig pool = pool_;
    pool.tabular_both_perspectives = false;
    {
      A2cAgent untrained(learners[0].params);
      const Agent* agents[2] = {&untrained, &fixed};
      RandomStream br = master_.Derive(5);
      EmitGap("baseline", 0,
              CollectPairs(agents, 0, 1, pool, cfg_.episode, cfg_.experiment.eval_episodes, br,
                           nullptr, -1, true));
    }
    A2cCollector collect = [&](int it, std::span<const A2cAgent* const> ls, RandomStream& rng,
                               std::vector<MetricsRow>& rows) {
      const Agent* agents[2] = {ls[0], &fixed};
      Collected c = CollectPairs(agents, 0, 1, pool, cfg_.episode, h.batch_size, rng,
                                 LogIteration(it) ? pairings_.get() : nullptr, it, true);
      if (LogIteration(it)) EmitStep2Collected(it, c, rows);
      return std::vector<std::vector<Trajectory>>{std::move(c.per_learner[0])};
    };
    A2cLoop(learners, collect);
    nn::SaveCheckpoint(learners[0].params, Path("extorter.ckpt"));
    A2cAgent trained(learners[0].params);
    const Agent* agents[2] = {&trained, &fixed};
    RandomStream fr = master_.Derive(6);
    EmitGap("final", cfg_.a2c.iterations,
            CollectPairs(agents, 0, 1, pool, cfg_.episode, cfg_.experiment.eval_episodes, fr,
                         nullptr, -1, true));
    if (fixed.params().Checksum() != before) throw ContractError("frozen Fixed-ICL was modified");
    writer_->Add({ctx_.Row(cfg_.a2c.iterations, -1, "fixed_params_unchanged", 1.0)});
  }

  void A2cStep3() {
    const A2cHyper h = ResolveA2c(cfg_);
    const std::string path = InputCheckpoint(cfg_.paths.extorter, ExperimentKind::kStep2Extortion,
                                             "extorter.ckpt", "extorter");
    const nn::ModelParams ext = LoadMatching(path);
    std::vector<A2cLearner> learners(2);
    for (auto& l : learners) {
      l.params = ext;
      l.opt = nn::InitOptState(ext);
    }
    A2cCollector collect = [&](int it, std::span<const A2cAgent* const> ls, RandomStream& rng,
                               std::vector<MetricsRow>& rows) {
      std::vector<const Agent*> agents(ls.begin(), ls.end());
      Collected c = CollectPairs(agents, 0, 1, pool_, cfg_.episode, h.batch_size, rng,
                                 LogIteration(it) ? pairings_.get() : nullptr, it);
      if (LogIteration(it)) EmitCollected(it, c, rows);
      return std::move(c.per_learner);
    };
    A2cLoop(learners, collect, [&](int it, std::span<const A2cAgent* const> ls) {
      if (it == cfg_.experiment.early_iteration) {
        std::vector<const Agent*> agents(ls.begin(), ls.end());
        EmitLearnerCurves("early", it, agents, master_.Derive(7));
      }
    });
    A2cAgent a(learners[0].params), b(learners[1].params);
    const Agent* agents[2] = {&a, &b};
    EmitLearnerCurves("final", cfg_.a2c.iterations, agents, master_.Derive(8));
  }

  void A2cMixed() {
    const A2cHyper h = ResolveA2c(cfg_);
    const bool shared = cfg_.a2c.shared_parameters;
    const int L = pool_.n_learners;
    auto learners = FreshLearners(shared ? 1 : L);
    A2cCollector collect = [&](int it, std::span<const A2cAgent* const> ls, RandomStream& rng,
                               std::vector<MetricsRow>& rows) {
      // With shared parameters every seat is played by the single model.
      std::vector<const Agent*> agents(L, ls[0]);
      if (!shared) agents.assign(ls.begin(), ls.end());
      Collected c = CollectPool(agents, pool_, cfg_.episode, h.batch_size, rng,
                                LogIteration(it) ? pairings_.get() : nullptr, it);
      if (LogIteration(it)) EmitCollected(it, c, rows);
      if (!shared) return std::move(c.per_learner);
      std::vector<std::vector<Trajectory>> merged(1);
      for (auto& v : c.per_learner) {
        for (auto& t : v) merged[0].push_back(std::move(t));
      }
      return merged;
    };
    auto curves = [&](const std::string& tag, std::int64_t outer,
                      std::span<const A2cAgent* const> ls) {
      if (L < 2) return;
      std::vector<const Agent*> agents(L, ls[0]);
      if (!shared) agents.assign(ls.begin(), ls.end());
      EmitLearnerCurves(tag, outer, agents, master_.Derive(tag == "early" ? 7 : 8));
    };
    A2cLoop(learners, collect, [&](int it, std::span<const A2cAgent* const> ls) {
      if (it == cfg_.experiment.early_iteration) curves("early", it, ls);
    });
    std::vector<A2cAgent> finals;
    for (const auto& l : learners) finals.emplace_back(l.params);
    std::vector<const A2cAgent*> ptrs;
    for (const auto& a : finals) ptrs.push_back(&a);
    curves("final", cfg_.a2c.iterations, ptrs);
  }

  const RunConfig& cfg_;
  std::uint64_t seed_;
  const RunHooks& hooks_;
  std::string dir_;
  PoolConfig pool_;
  nn::ModelArch arch_;
  PpiConfig ppi_;
  MetricsContext ctx_;
  RandomStream master_;
  std::unique_ptr<MetricsWriter> writer_;
  std::unique_ptr<PairingLog> pairings_;
};

}  // namespace

RunOutput RunExperiment(const RunConfig& cfg, std::uint64_t seed, const RunHooks& hooks) {
  Experiment e(cfg, seed, hooks);
  return e.Run();
}

}  // namespace ipd
