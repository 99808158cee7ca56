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

#include "ipd/config.h"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ipd/error.h"
#include "ipd/tabular.h"
#include "json.hpp"

namespace ipd {

using json = nlohmann::json;

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::kMixedTraining, "mixed_training"},
    {ExperimentKind::kStep1BestResponse, "step1_best_response"},
    {ExperimentKind::kStep2Extortion, "step2_extortion"},
    {ExperimentKind::kStep3MutualExtortion, "step3_mutual_extortion"},
    {ExperimentKind::kAblationOpponentId, "ablation_opponent_id"},
    {ExperimentKind::kAblationNoTabular, "ablation_no_tabular"},
    {ExperimentKind::kEquilibriumCheck, "equilibrium_check"},
    {ExperimentKind::kEvalVsFixed, "eval_vs_fixed"},
};

// Short names accepted on input.
constexpr KindName kAliases[] = {
    {ExperimentKind::kMixedTraining, "mixed"},
    {ExperimentKind::kStep1BestResponse, "step1"},
    {ExperimentKind::kStep2Extortion, "step2"},
    {ExperimentKind::kStep3MutualExtortion, "step3"},
    {ExperimentKind::kAblationOpponentId, "opponent_id"},
    {ExperimentKind::kAblationNoTabular, "no_tabular"},
};

// Reads keys out of one JSON object and complains about whatever is left.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + Key(key) + "' has the wrong type");
    }
  }

  const json* Child(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string Key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + Key(it.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void ReadOptimizer(const json& j, const std::string& path, nn::OptimizerConfig& o) {
  Section s(j, path);
  s.Get("learning_rate", o.learning_rate);
  s.Get("weight_decay", o.weight_decay);
  s.Get("beta1", o.beta1);
  s.Get("beta2", o.beta2);
  s.Get("epsilon", o.epsilon);
  s.Get("max_grad_norm", o.max_grad_norm);
  s.Finish();
}

void ApplyA2cOverrides(const json& j, A2cHyper& h) {
  Section s(j, "a2c.overrides");
  s.Get("batch_size", h.batch_size);
  s.Get("reward_rescaling", h.reward_rescaling);
  s.Get("gamma", h.gamma);
  s.Get("td_lambda", h.td_lambda);
  s.Get("gae_lambda", h.gae_lambda);
  s.Get("value_coefficient", h.value_coefficient);
  s.Get("entropy_reg", h.entropy_reg);
  s.Get("learning_rate", h.learning_rate);
  s.Get("adam_epsilon", h.adam_epsilon);
  s.Get("max_grad_norm", h.max_grad_norm);
  s.Get("advantages_normalization", h.advantages_normalization);
  s.Finish();
}

json OptimizerJson(const nn::OptimizerConfig& o) {
  return {{"learning_rate", o.learning_rate}, {"weight_decay", o.weight_decay},
          {"beta1", o.beta1},                 {"beta2", o.beta2},
          {"epsilon", o.epsilon},             {"max_grad_norm", o.max_grad_norm}};
}

void Apply(const json& doc, RunConfig& c) {
  Section root(doc, "");
  std::string ignored_profile;
  root.Get("profile", ignored_profile);
  if (const json* j = root.Child("episode")) {
    Section s(*j, "episode");
    s.Get("horizon", c.episode.horizon);
    s.Get("payoff", c.episode.payoff.reward);
    s.Finish();
  }
  if (const json* j = root.Child("pool")) {
    Section s(*j, "pool");
    s.Get("learner_fraction", c.pool.learner_fraction);
    std::string ablation = AblationName(c.pool.ablation);
    s.Get("ablation", ablation);
    c.pool.ablation = ParseAblation(ablation);
    s.Get("n_learners", c.pool.n_learners);
    s.Get("tabular_both_perspectives", c.pool.tabular_both_perspectives);
    s.Finish();
  }
  if (const json* j = root.Child("model")) {
    Section s(*j, "model");
    s.Get("hidden_dim", c.ppi.arch.hidden_dim);
    s.Get("embed_dim", c.ppi.arch.embed_dim);
    s.Finish();
  }
  if (const json* j = root.Child("ppi")) {
    Section s(*j, "ppi");
    auto& p = c.ppi;
    s.Get("n_phases", p.n_phases);
    s.Get("n_samples_per_phase", p.n_samples_per_phase);
    s.Get("n_pretrain_trajectories", p.n_pretrain_trajectories);
    s.Get("train_epochs", p.train_epochs);
    s.Get("train_batch_size", p.train_batch_size);
    s.Get("beta", p.beta);
    s.Get("rollout_depth", p.rollout_depth);
    s.Get("n_rollouts_per_action", p.n_rollouts_per_action);
    s.Get("rollout_gamma", p.rollout_gamma);
    s.Get("reward_noise", p.reward_noise);
    s.Get("reward_noise_std", p.reward_noise_std);
    if (const json* w = s.Child("loss_weights")) {
      Section ws(*w, "ppi.loss_weights");
      ws.Get("obs", p.loss_weights.obs);
      ws.Get("action", p.loss_weights.action);
      ws.Get("reward", p.loss_weights.reward);
      ws.Finish();
    }
    if (const json* o = s.Child("optimizer")) ReadOptimizer(*o, "ppi.optimizer", p.optimizer);
    s.Finish();
  }
  if (const json* j = root.Child("a2c")) {
    Section s(*j, "a2c");
    s.Get("preset", c.a2c.preset);
    if (const json* o = s.Child("overrides")) {
      // Merge so a file can add to the profile's overrides.
      json merged = json::parse(c.a2c.overrides);
      if (!o->is_object()) throw ConfigError("'a2c.overrides' must be an object");
      merged.update(*o);
      A2cHyper probe;
      ApplyA2cOverrides(merged, probe);
      c.a2c.overrides = merged.dump();
    }
    s.Get("iterations", c.a2c.iterations);
    s.Get("shared_parameters", c.a2c.shared_parameters);
    s.Finish();
  }
  if (const json* j = root.Child("experiment")) {
    Section s(*j, "experiment");
    auto& e = c.experiment;
    std::string kind = ExperimentKindName(e.kind);
    s.Get("kind", kind);
    e.kind = ParseExperimentKind(kind);
    std::string algo = AlgorithmName(e.algorithm);
    s.Get("algorithm", algo);
    e.algorithm = ParseAlgorithm(algo);
    s.Get("eval_episodes", e.eval_episodes);
    s.Get("eval_strategies", e.eval_strategies);
    s.Get("early_phase", e.early_phase);
    s.Get("early_iteration", e.early_iteration);
    s.Get("log_every", e.log_every);
    s.Get("final_fraction", e.final_fraction);
    s.Get("log_pairings", e.log_pairings);
    s.Get("save_datasets", e.save_datasets);
    s.Finish();
  }
  if (const json* j = root.Child("paths")) {
    Section s(*j, "paths");
    s.Get("out_root", c.paths.out_root);
    s.Get("fixed_icl", c.paths.fixed_icl);
    s.Get("extorter", c.paths.extorter);
    s.Get("checkpoint", c.paths.checkpoint);
    s.Get("pretrain_dataset", c.paths.pretrain_dataset);
    s.Finish();
  }
  root.Get("seeds", c.seeds);
  root.Finish();
}

}  // namespace

ExperimentKind ParseExperimentKind(const std::string& s) {
  for (const auto& k : kKinds) {
    if (s == k.name) return k.kind;
  }
  for (const auto& k : kAliases) {
    if (s == k.name) return k.kind;
  }
  std::string all;
  for (const auto& k : kKinds) all += std::string(all.empty() ? "" : ", ") + k.name;
  throw ConfigError("unknown experiment '" + s + "' (expected one of " + all + ")");
}

const char* ExperimentKindName(ExperimentKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

Algorithm ParseAlgorithm(const std::string& s) {
  if (s == "ppi") return Algorithm::kPpi;
  if (s == "a2c") return Algorithm::kA2c;
  throw ConfigError("unknown algorithm '" + s + "' (expected ppi or a2c)");
}

const char* AlgorithmName(Algorithm a) { return a == Algorithm::kPpi ? "ppi" : "a2c"; }

RunConfig ProfileDefaults(const std::string& profile) {
  RunConfig c;
  c.profile = profile;
  if (profile == "full") return c;
  if (profile != "desk") throw ConfigError("unknown profile '" + profile + "' (expected full or desk)");
  c.episode.horizon = 32;
  c.ppi.arch.hidden_dim = 32;
  c.ppi.arch.embed_dim = 16;
  c.ppi.n_phases = 8;
  c.ppi.n_samples_per_phase = 1500;
  c.ppi.n_pretrain_trajectories = 10000;
  c.ppi.rollout_depth = 8;
  c.ppi.train_epochs = 3;
  c.ppi.optimizer.learning_rate = 3e-3;
  c.ppi.n_rollouts_per_action = 8;
  c.ppi.beta = 1.0;
  c.a2c.overrides = R"({"batch_size":256})";
  c.a2c.iterations = 600;
  c.experiment.early_phase = 2;
  c.experiment.early_iteration = 60;
  c.experiment.log_every = 5;
  c.seeds = {1, 2, 3};
  return c;
}

RunConfig ParseRunConfig(const std::string& json_text, const std::string& profile) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  std::string name = profile;
  if (name.empty()) {
    auto it = doc.find("profile");
    if (it == doc.end()) throw ConfigError("missing required key 'profile'");
    if (!it->is_string()) throw ConfigError("'profile' must be a string");
    name = it->get<std::string>();
  }
  RunConfig c = ProfileDefaults(name);
  Apply(doc, c);
  Validate(c);
  return c;
}

RunConfig LoadRunConfig(const std::string& path, const std::string& profile) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str(), profile);
}

std::string RunConfigToJson(const RunConfig& c) {
  const auto& p = c.ppi;
  const auto& e = c.experiment;
  json doc = {
      {"profile", c.profile},
      {"episode", {{"horizon", c.episode.horizon}, {"payoff", c.episode.payoff.reward}}},
      {"pool",
       {{"learner_fraction", c.pool.learner_fraction},
        {"ablation", AblationName(c.pool.ablation)},
        {"n_learners", c.pool.n_learners},
        {"tabular_both_perspectives", c.pool.tabular_both_perspectives}}},
      {"model", {{"hidden_dim", p.arch.hidden_dim}, {"embed_dim", p.arch.embed_dim}}},
      {"ppi",
       {{"n_phases", p.n_phases},
        {"n_samples_per_phase", p.n_samples_per_phase},
        {"n_pretrain_trajectories", p.n_pretrain_trajectories},
        {"train_epochs", p.train_epochs},
        {"train_batch_size", p.train_batch_size},
        {"beta", p.beta},
        {"rollout_depth", p.rollout_depth},
        {"n_rollouts_per_action", p.n_rollouts_per_action},
        {"rollout_gamma", p.rollout_gamma},
        {"reward_noise", p.reward_noise},
        {"reward_noise_std", p.reward_noise_std},
        {"loss_weights",
         {{"obs", p.loss_weights.obs},
          {"action", p.loss_weights.action},
          {"reward", p.loss_weights.reward}}},
        {"optimizer", OptimizerJson(p.optimizer)}}},
      {"a2c",
       {{"preset", c.a2c.preset},
        {"overrides", json::parse(c.a2c.overrides)},
        {"iterations", c.a2c.iterations},
        {"shared_parameters", c.a2c.shared_parameters}}},
      {"experiment",
       {{"kind", ExperimentKindName(e.kind)},
        {"algorithm", AlgorithmName(e.algorithm)},
        {"eval_episodes", e.eval_episodes},
        {"eval_strategies", e.eval_strategies},
        {"early_phase", e.early_phase},
        {"early_iteration", e.early_iteration},
        {"log_every", e.log_every},
        {"final_fraction", e.final_fraction},
        {"log_pairings", e.log_pairings},
        {"save_datasets", e.save_datasets}}},
      {"paths",
       {{"out_root", c.paths.out_root},
        {"fixed_icl", c.paths.fixed_icl},
        {"extorter", c.paths.extorter},
        {"checkpoint", c.paths.checkpoint},
        {"pretrain_dataset", c.paths.pretrain_dataset}}},
      {"seeds", c.seeds},
  };
  return doc.dump(2);
}

void Validate(const RunConfig& c) {
  Validate(c.episode);
  Validate(c.pool);
  Validate(c.ppi);
  Validate(ResolveA2c(c));
  if (c.a2c.iterations < 0) throw ConfigError("a2c.iterations must be >= 0");
  const auto& e = c.experiment;
  if (e.eval_episodes < 1) throw ConfigError("experiment.eval_episodes must be >= 1");
  for (const auto& s : e.eval_strategies) NamedTabular(s);
  if (e.log_every < 1) throw ConfigError("experiment.log_every must be >= 1");
  if (!(e.final_fraction > 0.0 && e.final_fraction <= 1.0)) {
    throw ConfigError("experiment.final_fraction must lie in (0,1]");
  }
  if (c.seeds.empty()) throw ConfigError("seeds must be nonempty");
}

A2cHyper ResolveA2c(const RunConfig& c) {
  int step = 4;
  if (c.a2c.preset == "auto") {
    switch (c.experiment.kind) {
      case ExperimentKind::kStep1BestResponse:
        step = 1;
        break;
      case ExperimentKind::kStep2Extortion:
        step = 2;
        break;
      case ExperimentKind::kStep3MutualExtortion:
        step = 3;
        break;
      default:
        step = 4;
    }
  } else if (c.a2c.preset.size() == 5 && c.a2c.preset.rfind("step", 0) == 0 &&
             c.a2c.preset[4] >= '1' && c.a2c.preset[4] <= '4') {
    step = c.a2c.preset[4] - '0';
  } else {
    throw ConfigError("a2c.preset must be auto or step1..step4, got '" + c.a2c.preset + "'");
  }
  A2cHyper h = A2cPreset(step);
  ApplyA2cOverrides(json::parse(c.a2c.overrides), h);
  return h;
}

nn::ModelArch ResolveArch(const RunConfig& c) {
  nn::ModelArch a = c.ppi.arch;
  a.conditioning_dim = ResolvePool(c).ablation == Ablation::kOpponentId ? nn::kConditioningDim : 0;
  return a;
}

PoolConfig ResolvePool(const RunConfig& c) {
  PoolConfig p = c.pool;
  switch (c.experiment.kind) {
    case ExperimentKind::kStep1BestResponse:
      p.learner_fraction = 0.0;
      p.n_learners = 1;
      p.ablation = Ablation::kNone;
      break;
    case ExperimentKind::kStep2Extortion:
    case ExperimentKind::kStep3MutualExtortion:
      p.learner_fraction = 1.0;
      p.n_learners = 2;
      p.ablation = Ablation::kNone;
      break;
    case ExperimentKind::kMixedTraining:
      p.ablation = Ablation::kNone;
      break;
    case ExperimentKind::kAblationOpponentId:
      p.ablation = Ablation::kOpponentId;
      break;
    case ExperimentKind::kAblationNoTabular:
      p.ablation = Ablation::kNoTabular;
      break;
    default:
      break;
  }
  return p;
}

std::string ResolveOutRoot(const RunConfig& c) {
  if (!c.paths.out_root.empty()) return c.paths.out_root;
  if (const char* env = std::getenv("IPD_OUT_ROOT"); env != nullptr && *env != '\0') return env;
  return "runs";
}

}  // namespace ipd
