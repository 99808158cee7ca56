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

#include "ipd/nn/optim.h"

#include <cmath>

#include "ipd/error.h"

namespace ipd::nn {

void Validate(const OptimizerConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) throw ConfigError("beta1 must lie in [0,1)");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) throw ConfigError("beta2 must lie in [0,1)");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(cfg.max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be > 0");
  if (!(cfg.weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
}

OptState InitOptState(const ModelParams& params) {
  OptState s;
  s.m.assign(params.size(), 0.0);
  s.v.assign(params.size(), 0.0);
  return s;
}

double GlobalNorm(const Gradients& grads) {
  double sq = 0.0;
  for (double g : grads.data()) sq += g * g;
  return std::sqrt(sq);
}

double ClipByGlobalNorm(Gradients& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractError("max_norm must be > 0");
  double norm = GlobalNorm(grads);
  if (norm > max_norm) {
    double scale = max_norm / norm;
    for (double& g : grads.data()) g *= scale;
  }
  return norm;
}

void AdamWStep(ModelParams& params, const Gradients& grads, OptState& opt,
               const OptimizerConfig& cfg) {
  if (!params.SameShape(grads) || opt.m.size() != params.size() ||
      opt.v.size() != params.size()) {
    throw ContractError("AdamWStep: shape mismatch");
  }
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
  const double lr = cfg.learning_rate;
  auto& w = params.data();
  const auto& g = grads.data();
  for (const BlockInfo& b : params.blocks()) {
    const double decay = b.is_bias ? 0.0 : lr * cfg.weight_decay;
    for (std::size_t k = b.offset; k < b.offset + b.size(); ++k) {
      opt.m[k] = cfg.beta1 * opt.m[k] + (1.0 - cfg.beta1) * g[k];
      opt.v[k] = cfg.beta2 * opt.v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double mhat = opt.m[k] / bc1;
      const double vhat = opt.v[k] / bc2;
      w[k] -= decay * w[k];
      w[k] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

}  // namespace ipd::nn
