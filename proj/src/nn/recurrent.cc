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

#include "ipd/nn/recurrent.h"

#include "ipd/error.h"

namespace ipd::nn {

namespace {

void AddEmbedding(const ModelParams& p, const Token& tok, double* out) {
  const int e = p.arch().embed_dim;
  if (tok.obs >= 0) {
    auto w = p.block(Block::kObsEmbed);
    for (int i = 0; i < e; ++i) out[i] += w(i, tok.obs);
  }
  if (tok.action >= 0) {
    auto w = p.block(Block::kActionEmbed);
    for (int i = 0; i < e; ++i) out[i] += w(i, tok.action);
  }
  if (tok.has_reward()) {
    auto w = p.block(Block::kRewardEmbed);
    for (int i = 0; i < e; ++i) out[i] += w(i, 0) * tok.reward;
  }
  if (tok.cond != nullptr) {
    const int c = p.arch().conditioning_dim;
    if (c == 0) throw ContractError("conditioning token fed to a model without cond_embed");
    auto w = p.block(Block::kCondEmbed);
    for (int i = 0; i < e; ++i) {
      double acc = 0.0;
      for (int k = 0; k < c; ++k) acc += w(i, k) * tok.cond[k];
      out[i] += acc;
    }
  }
}

void AccumulateEmbeddingGrad(const ModelParams& p, const Token& tok, const double* dx,
                             Gradients& g) {
  const int e = p.arch().embed_dim;
  if (tok.obs >= 0) {
    auto w = g.block(Block::kObsEmbed);
    for (int i = 0; i < e; ++i) w(i, tok.obs) += dx[i];
  }
  if (tok.action >= 0) {
    auto w = g.block(Block::kActionEmbed);
    for (int i = 0; i < e; ++i) w(i, tok.action) += dx[i];
  }
  if (tok.has_reward()) {
    auto w = g.block(Block::kRewardEmbed);
    for (int i = 0; i < e; ++i) w(i, 0) += dx[i] * tok.reward;
  }
  if (tok.cond != nullptr) {
    const int c = p.arch().conditioning_dim;
    auto w = g.block(Block::kCondEmbed);
    for (int i = 0; i < e; ++i) {
      for (int k = 0; k < c; ++k) w(i, k) += dx[i] * tok.cond[k];
    }
  }
}

}  // namespace

RowVector EmbedStep(const ModelParams& p, const Token& tok) {
  RowVector out = RowVector::Zero(p.arch().embed_dim);
  AddEmbedding(p, tok, out.data());
  return out;
}

Matrix EmbedBatch(const ModelParams& p, const std::vector<Token>& toks) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(toks.size()), p.arch().embed_dim);
  for (std::size_t b = 0; b < toks.size(); ++b) {
    AddEmbedding(p, toks[b], out.row(static_cast<Eigen::Index>(b)).data());
  }
  return out;
}

namespace {

struct CellOut {
  Matrix z, r, n, hn, h;
};

CellOut CellForward(const ModelParams& p, const Matrix& x, const Matrix& h_prev) {
  const int H = p.arch().hidden_dim;
  auto wx = p.block(Block::kGruWx);
  auto wh = p.block(Block::kGruWh);
  auto bx = p.block(Block::kGruBx);
  auto bh = p.block(Block::kGruBh);
  Matrix gx = x * wx.transpose();
  gx.rowwise() += bx.row(0);
  Matrix gh = h_prev * wh.transpose();
  gh.rowwise() += bh.row(0);
  CellOut c;
  c.z = (gx.leftCols(H) + gh.leftCols(H)).unaryExpr([](double v) { return Sigmoid(v); });
  c.r = (gx.middleCols(H, H) + gh.middleCols(H, H)).unaryExpr([](double v) { return Sigmoid(v); });
  c.hn = gh.rightCols(H);
  c.n = (gx.rightCols(H).array() + c.r.array() * c.hn.array()).tanh().matrix();
  c.h = ((1.0 - c.z.array()) * c.n.array() + c.z.array() * h_prev.array()).matrix();
  return c;
}

}  // namespace

Matrix GruCell(const ModelParams& p, const Matrix& x, const Matrix& h) {
  return CellForward(p, x, h).h;
}

Matrix SwishRows(const Matrix& h) {
  return h.unaryExpr([](double v) { return Swish(v); });
}

std::vector<RowVector> GruForward(const ModelParams& p, const std::vector<RowVector>& inputs) {
  std::vector<RowVector> out;
  out.reserve(inputs.size());
  Matrix h = Matrix::Zero(1, p.arch().hidden_dim);
  for (const RowVector& x : inputs) {
    Matrix xm = x;
    h = GruCell(p, xm, h);
    out.push_back(SwishRows(h).row(0));
  }
  return out;
}

GruTape ForwardTape(const ModelParams& p, const TokenBatch& tokens) {
  GruTape tape;
  const int L = tokens.length();
  const int B = tokens.batch_size();
  tape.batch = B;
  tape.x.reserve(L);
  tape.z.reserve(L);
  tape.r.reserve(L);
  tape.n.reserve(L);
  tape.hn.reserve(L);
  tape.h.reserve(L);
  tape.s.reserve(L);
  Matrix h = Matrix::Zero(B, p.arch().hidden_dim);
  for (int t = 0; t < L; ++t) {
    Matrix x = EmbedBatch(p, tokens.steps[t]);
    CellOut c = CellForward(p, x, h);
    h = c.h;
    tape.x.push_back(std::move(x));
    tape.z.push_back(std::move(c.z));
    tape.r.push_back(std::move(c.r));
    tape.n.push_back(std::move(c.n));
    tape.hn.push_back(std::move(c.hn));
    tape.s.push_back(SwishRows(h));
    tape.h.push_back(std::move(c.h));
  }
  return tape;
}

void BackwardTape(const ModelParams& p, const TokenBatch& tokens, const GruTape& tape,
                  const std::vector<Matrix>& ds, Gradients& grads) {
  const int L = tokens.length();
  const int B = tape.batch;
  const int H = p.arch().hidden_dim;
  if (static_cast<int>(ds.size()) != L) throw ContractError("BackwardTape: ds length mismatch");
  auto wx = p.block(Block::kGruWx);
  auto wh = p.block(Block::kGruWh);
  auto gwx = grads.block(Block::kGruWx);
  auto gwh = grads.block(Block::kGruWh);
  auto gbx = grads.block(Block::kGruBx);
  auto gbh = grads.block(Block::kGruBh);

  Matrix dh_next = Matrix::Zero(B, H);
  Matrix zeros = Matrix::Zero(B, H);
  Matrix dgx(B, 3 * H), dgh(B, 3 * H);
  for (int t = L - 1; t >= 0; --t) {
    const Matrix& h = tape.h[t];
    const Matrix& h_prev = t > 0 ? tape.h[t - 1] : zeros;
    const auto z = tape.z[t].array();
    const auto r = tape.r[t].array();
    const auto n = tape.n[t].array();
    Matrix dh = dh_next;
    if (ds[t].size() != 0) {
      dh.array() += ds[t].array() * h.unaryExpr([](double v) { return SwishGrad(v); }).array();
    }
    auto dha = dh.array();
    Eigen::ArrayXXd dn = dha * (1.0 - z);
    Eigen::ArrayXXd dz = dha * (h_prev.array() - n);
    Eigen::ArrayXXd dan = dn * (1.0 - n * n);
    Eigen::ArrayXXd dr = dan * tape.hn[t].array();
    dgx.leftCols(H) = (dz * z * (1.0 - z)).matrix();
    dgx.middleCols(H, H) = (dr * r * (1.0 - r)).matrix();
    dgx.rightCols(H) = dan.matrix();
    dgh.leftCols(H) = dgx.leftCols(H);
    dgh.middleCols(H, H) = dgx.middleCols(H, H);
    dgh.rightCols(H) = (dan * r).matrix();

    gwx.noalias() += dgx.transpose() * tape.x[t];
    gbx.row(0) += dgx.colwise().sum();
    gbh.row(0) += dgh.colwise().sum();
    Matrix dx = dgx * wx;
    for (int b = 0; b < B; ++b) {
      AccumulateEmbeddingGrad(p, tokens.steps[t][b], dx.row(b).data(), grads);
    }
    Matrix dh_prev = (dha * z).matrix();
    if (t > 0) {
      gwh.noalias() += dgh.transpose() * h_prev;
      dh_prev.noalias() += dgh * wh;
    }
    dh_next = std::move(dh_prev);
  }
}

HeadOutputs Heads(const ModelParams& p, const Matrix& s) {
  HeadOutputs out;
  out.obs_logits = s * p.block(Block::kHeadObsW).transpose();
  out.obs_logits.rowwise() += p.block(Block::kHeadObsB).row(0);
  out.action_logits = s * p.block(Block::kHeadActionW).transpose();
  out.action_logits.rowwise() += p.block(Block::kHeadActionB).row(0);
  out.reward = s * p.block(Block::kHeadRewardW).row(0).transpose();
  out.reward.array() += p.block(Block::kHeadRewardB)(0, 0);
  out.value = s * p.block(Block::kValueW).row(0).transpose();
  out.value.array() += p.block(Block::kValueB)(0, 0);
  return out;
}

Matrix HeadsBackward(const ModelParams& p, const Matrix& s, const Matrix& d_obs_logits,
                     const Matrix& d_action_logits, const Vector& d_reward,
                     const Vector& d_value, Gradients& grads) {
  Matrix ds = Matrix::Zero(s.rows(), s.cols());
  if (d_obs_logits.size() != 0) {
    ds.noalias() += d_obs_logits * p.block(Block::kHeadObsW);
    grads.block(Block::kHeadObsW).noalias() += d_obs_logits.transpose() * s;
    grads.block(Block::kHeadObsB).row(0) += d_obs_logits.colwise().sum();
  }
  if (d_action_logits.size() != 0) {
    ds.noalias() += d_action_logits * p.block(Block::kHeadActionW);
    grads.block(Block::kHeadActionW).noalias() += d_action_logits.transpose() * s;
    grads.block(Block::kHeadActionB).row(0) += d_action_logits.colwise().sum();
  }
  if (d_reward.size() != 0) {
    ds.noalias() += d_reward * p.block(Block::kHeadRewardW).row(0);
    grads.block(Block::kHeadRewardW).row(0).noalias() += d_reward.transpose() * s;
    grads.block(Block::kHeadRewardB)(0, 0) += d_reward.sum();
  }
  if (d_value.size() != 0) {
    ds.noalias() += d_value * p.block(Block::kValueW).row(0);
    grads.block(Block::kValueW).row(0).noalias() += d_value.transpose() * s;
    grads.block(Block::kValueB)(0, 0) += d_value.sum();
  }
  return ds;
}

Matrix SoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double m = logits.row(i).maxCoeff();
    auto e = (logits.row(i).array() - m).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

Matrix LogSoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double m = logits.row(i).maxCoeff();
    double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = (logits.row(i).array() - lse).matrix();
  }
  return out;
}

}  // namespace ipd::nn
