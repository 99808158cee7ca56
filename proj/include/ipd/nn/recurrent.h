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

// Batched GRU forward pass with a recorded tape, exact backpropagation
// through time, and the linear output heads.
//
// Cell (gate order update z, reset r, candidate n):
//   z  = sigmoid(Wxz x + bxz + Whz h + bhz)
//   r  = sigmoid(Wxr x + bxr + Whr h + bhr)
//   n  = tanh(Wxn x + bxn + r * (Whn h + bhn))
//   h' = (1 - z) * n + z * h
// The heads read swish(h') = h' * sigmoid(h').

#ifndef IPD_NN_RECURRENT_H_
#define IPD_NN_RECURRENT_H_

#include <cmath>
#include <limits>
#include <vector>

#include "ipd/nn/model.h"

namespace ipd::nn {

// One input token for one sequence. Absent modalities contribute nothing to
// the embedding.
struct Token {
  int obs = -1;
  int action = -1;
  double reward = std::numeric_limits<double>::quiet_NaN();
  const double* cond = nullptr;  // conditioning_dim entries, or null

  bool has_reward() const { return !std::isnan(reward); }
};

// steps[t][b] is the token fed at step t to sequence b. Every step has the
// same number of rows.
struct TokenBatch {
  std::vector<std::vector<Token>> steps;
  int batch_size() const { return steps.empty() ? 0 : static_cast<int>(steps[0].size()); }
  int length() const { return static_cast<int>(steps.size()); }
};

inline double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double Swish(double x) { return x * Sigmoid(x); }
inline double SwishGrad(double x) {
  double s = Sigmoid(x);
  return s + x * s * (1.0 - s);
}

// Sum of the projections of the present modalities.
RowVector EmbedStep(const ModelParams& p, const Token& tok);
Matrix EmbedBatch(const ModelParams& p, const std::vector<Token>& toks);

// One GRU update for a batch: rows of `x` (B x E) and `h` (B x H).
Matrix GruCell(const ModelParams& p, const Matrix& x, const Matrix& h);
Matrix SwishRows(const Matrix& h);

// Runs a single sequence of embeddings from a zero state and returns the
// swish-activated hidden outputs.
std::vector<RowVector> GruForward(const ModelParams& p, const std::vector<RowVector>& inputs);

struct GruTape {
  std::vector<Matrix> x;   // B x E
  std::vector<Matrix> z;   // B x H
  std::vector<Matrix> r;
  std::vector<Matrix> n;
  std::vector<Matrix> hn;  // Whn h + bhn
  std::vector<Matrix> h;   // raw hidden after the step
  std::vector<Matrix> s;   // swish(h)
  int batch = 0;
};

GruTape ForwardTape(const ModelParams& p, const TokenBatch& tokens);

// Backpropagates dL/ds (one B x H matrix per step, empty for steps with no
// head loss) through the recurrence into `grads` (accumulating).
void BackwardTape(const ModelParams& p, const TokenBatch& tokens, const GruTape& tape,
                  const std::vector<Matrix>& ds, Gradients& grads);

struct HeadOutputs {
  Matrix obs_logits;     // B x 5
  Matrix action_logits;  // B x 2
  Vector reward;         // B
  Vector value;          // B
};

HeadOutputs Heads(const ModelParams& p, const Matrix& s);

// Gradients of the head inputs. Any of the d* arguments may be empty (size
// 0) when that head carries no loss. Returns dL/ds and accumulates head
// parameter gradients into `grads`.
Matrix HeadsBackward(const ModelParams& p, const Matrix& s, const Matrix& d_obs_logits,
                     const Matrix& d_action_logits, const Vector& d_reward,
                     const Vector& d_value, Gradients& grads);

// Row-wise softmax and log-softmax.
Matrix SoftmaxRows(const Matrix& logits);
Matrix LogSoftmaxRows(const Matrix& logits);

}  // namespace ipd::nn

#endif  // IPD_NN_RECURRENT_H_
