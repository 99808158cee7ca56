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

#ifndef IPD_NN_OPTIM_H_
#define IPD_NN_OPTIM_H_

#include <cstdint>
#include <vector>

#include "ipd/nn/model.h"

namespace ipd::nn {

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-8;
  double max_grad_norm = 1.0;
};

void Validate(const OptimizerConfig& cfg);

struct OptState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

OptState InitOptState(const ModelParams& params);

double GlobalNorm(const Gradients& grads);

// Rescales so the global L2 norm is at most max_norm. Returns the norm
// before clipping.
double ClipByGlobalNorm(Gradients& grads, double max_norm);

// Adam with bias correction and decoupled weight decay
// (p <- p - lr*wd*p, skipped for bias blocks), epsilon outside the sqrt.
void AdamWStep(ModelParams& params, const Gradients& grads, OptState& opt,
               const OptimizerConfig& cfg);

}  // namespace ipd::nn

#endif  // IPD_NN_OPTIM_H_
