// core/src/encoder.cc

// Copyright 2026  nbscale authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "nbscale/encoder.h"

#include <cmath>
#include <stdexcept>

namespace nbscale {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using GradMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const RowVector>;
using GradRowMap = Eigen::Map<RowVector>;

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

ConstMap View(const ScorerModel& m, const TensorRef& t) {
  return ConstMap(m.params().data() + t.offset, t.rows, t.cols);
}
ConstRowMap RowView(const ScorerModel& m, const TensorRef& t) {
  return ConstRowMap(m.params().data() + t.offset, t.size());
}
GradMap GradView(std::span<double> g, const TensorRef& t) {
  return GradMap(g.data() + t.offset, t.rows, t.cols);
}
GradRowMap GradRowView(std::span<double> g, const TensorRef& t) {
  return GradRowMap(g.data() + t.offset, t.size());
}

double Gelu(double u) {
  const double t = std::tanh(kGeluScale * (u + kGeluCubic * u * u * u));
  return 0.5 * u * (1.0 + t);
}

double GeluGrad(double u) {
  const double t = std::tanh(kGeluScale * (u + kGeluCubic * u * u * u));
  return 0.5 * (1.0 + t) +
         0.5 * u * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCubic * u * u);
}

Matrix LayerNormForward(const Matrix& x, const ConstRowMap& gamma,
                        const ConstRowMap& beta, LayerNormCache& c) {
  const Eigen::Index rows = x.rows();
  c.xhat.resize(rows, x.cols());
  c.inv_std.resize(rows);
  Matrix y(rows, x.cols());
  for (Eigen::Index t = 0; t < rows; ++t) {
    const double mean = x.row(t).mean();
    const RowVector centered = x.row(t).array() - mean;
    const double var = centered.squaredNorm() / static_cast<double>(x.cols());
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    c.inv_std(t) = inv;
    c.xhat.row(t) = centered * inv;
    y.row(t) = c.xhat.row(t).cwiseProduct(gamma) + beta;
  }
  return y;
}

Matrix LayerNormBackward(const Matrix& dy, const ConstRowMap& gamma,
                         const LayerNormCache& c, GradRowMap d_gamma,
                         GradRowMap d_beta) {
  d_gamma += dy.cwiseProduct(c.xhat).colwise().sum();
  d_beta += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gamma.array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index t = 0; t < dy.rows(); ++t) {
    const double m1 = dxhat.row(t).mean();
    const double m2 = dxhat.row(t).cwiseProduct(c.xhat.row(t)).mean();
    dx.row(t) = c.inv_std(t) *
                (dxhat.row(t).array() - m1 - c.xhat.row(t).array() * m2).matrix();
  }
  return dx;
}

void SoftmaxRows(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp();
    s.row(r) /= s.row(r).sum();
  }
}

Matrix BlockForward(const ScorerModel& model, const LayerTensors& W,
                    const Matrix& x, BlockCache& c) {
  const int heads = model.config().heads;
  const Eigen::Index h = x.cols(), T = x.rows();
  const Eigen::Index dh = h / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  c.input = x;
  c.q = (x * View(model, W.wq)).rowwise() + RowView(model, W.bq);
  c.k = (x * View(model, W.wk)).rowwise() + RowView(model, W.bk);
  c.v = (x * View(model, W.wv)).rowwise() + RowView(model, W.bv);
  c.attention.resize(heads);
  c.context.resize(T, h);
  for (int j = 0; j < heads; ++j) {
    Matrix s = c.q.middleCols(j * dh, dh) * c.k.middleCols(j * dh, dh).transpose();
    s *= scale;
    SoftmaxRows(s);
    c.context.middleCols(j * dh, dh) = s * c.v.middleCols(j * dh, dh);
    c.attention[j] = std::move(s);
  }
  Matrix r1 = x + ((c.context * View(model, W.wo)).rowwise() + RowView(model, W.bo));
  c.mid = LayerNormForward(r1, RowView(model, W.ln1_g), RowView(model, W.ln1_b), c.ln1);
  c.pre_act = (c.mid * View(model, W.w1)).rowwise() + RowView(model, W.b1);
  c.act = c.pre_act.unaryExpr(&Gelu);
  Matrix r2 = c.mid + ((c.act * View(model, W.w2)).rowwise() + RowView(model, W.b2));
  return LayerNormForward(r2, RowView(model, W.ln2_g), RowView(model, W.ln2_b), c.ln2);
}

Matrix BlockBackward(const ScorerModel& model, const LayerTensors& W,
                     const BlockCache& c, const Matrix& d_out,
                     std::span<double> grad) {
  const int heads = model.config().heads;
  const Eigen::Index h = c.input.cols(), T = c.input.rows();
  const Eigen::Index dh = h / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const Matrix d_r2 = LayerNormBackward(d_out, RowView(model, W.ln2_g), c.ln2,
                                        GradRowView(grad, W.ln2_g),
                                        GradRowView(grad, W.ln2_b));
  // feed-forward
  GradView(grad, W.w2).noalias() += c.act.transpose() * d_r2;
  GradRowView(grad, W.b2) += d_r2.colwise().sum();
  Matrix d_pre = d_r2 * View(model, W.w2).transpose();
  d_pre.array() *= c.pre_act.unaryExpr(&GeluGrad).array();
  GradView(grad, W.w1).noalias() += c.mid.transpose() * d_pre;
  GradRowView(grad, W.b1) += d_pre.colwise().sum();
  Matrix d_mid = d_r2;
  d_mid.noalias() += d_pre * View(model, W.w1).transpose();

  const Matrix d_r1 = LayerNormBackward(d_mid, RowView(model, W.ln1_g), c.ln1,
                                        GradRowView(grad, W.ln1_g),
                                        GradRowView(grad, W.ln1_b));
  // attention output projection
  GradView(grad, W.wo).noalias() += c.context.transpose() * d_r1;
  GradRowView(grad, W.bo) += d_r1.colwise().sum();
  const Matrix d_ctx = d_r1 * View(model, W.wo).transpose();

  Matrix dq(T, h), dk(T, h), dv(T, h);
  for (int j = 0; j < heads; ++j) {
    const Matrix& a = c.attention[j];
    const auto d_ctx_j = d_ctx.middleCols(j * dh, dh);
    const Matrix d_a = d_ctx_j * c.v.middleCols(j * dh, dh).transpose();
    dv.middleCols(j * dh, dh) = a.transpose() * d_ctx_j;
    const Eigen::VectorXd row_dot = d_a.cwiseProduct(a).rowwise().sum();
    Matrix d_s = a.cwiseProduct(d_a.colwise() - row_dot);
    d_s *= scale;
    dq.middleCols(j * dh, dh) = d_s * c.k.middleCols(j * dh, dh);
    dk.middleCols(j * dh, dh) = d_s.transpose() * c.q.middleCols(j * dh, dh);
  }
  Matrix d_x = d_r1;
  GradView(grad, W.wq).noalias() += c.input.transpose() * dq;
  GradRowView(grad, W.bq) += dq.colwise().sum();
  d_x.noalias() += dq * View(model, W.wq).transpose();
  GradView(grad, W.wk).noalias() += c.input.transpose() * dk;
  GradRowView(grad, W.bk) += dk.colwise().sum();
  d_x.noalias() += dk * View(model, W.wk).transpose();
  GradView(grad, W.wv).noalias() += c.input.transpose() * dv;
  GradRowView(grad, W.bv) += dv.colwise().sum();
  d_x.noalias() += dv * View(model, W.wv).transpose();
  return d_x;
}

}  // namespace

void EncoderForward(const ScorerModel& model, std::span<const int> input,
                    EncoderCache& cache) {
  const auto& cfg = model.config();
  const auto& L = model.layout();
  if (input.empty() || input.size() > static_cast<size_t>(cfg.max_len) + 1)
    throw std::invalid_argument("EncoderForward: input length out of range");
  const Eigen::Index T = static_cast<Eigen::Index>(input.size());
  const ConstMap tok = View(model, L.tok_emb);
  const ConstMap pos = View(model, L.pos_emb);
  Matrix x0(T, cfg.hidden);
  for (Eigen::Index t = 0; t < T; ++t) {
    const int id = input[t];
    if (id < 0 || id >= cfg.model_vocab())
      throw std::invalid_argument("EncoderForward: token id out of range");
    x0.row(t) = tok.row(id) + pos.row(t);
  }
  cache.input.assign(input.begin(), input.end());
  Matrix x = LayerNormForward(x0, RowView(model, L.emb_ln_g),
                              RowView(model, L.emb_ln_b), cache.emb_ln);
  cache.blocks.resize(L.layers.size());
  for (size_t l = 0; l < L.layers.size(); ++l)
    x = BlockForward(model, L.layers[l], x, cache.blocks[l]);
  cache.output = std::move(x);
}

void EncoderBackward(const ScorerModel& model, const EncoderCache& cache,
                     Matrix d_output, std::span<double> grad) {
  const auto& L = model.layout();
  Matrix d = std::move(d_output);
  for (size_t l = L.layers.size(); l-- > 0;)
    d = BlockBackward(model, L.layers[l], cache.blocks[l], d, grad);
  const Matrix d_x0 =
      LayerNormBackward(d, RowView(model, L.emb_ln_g), cache.emb_ln,
                        GradRowView(grad, L.emb_ln_g), GradRowView(grad, L.emb_ln_b));
  GradMap d_tok = GradView(grad, L.tok_emb);
  GradMap d_pos = GradView(grad, L.pos_emb);
  for (Eigen::Index t = 0; t < d_x0.rows(); ++t) {
    d_tok.row(cache.input[t]) += d_x0.row(t);
    d_pos.row(t) += d_x0.row(t);
  }
}

double HeadForward(const ScorerModel& model, const EncoderCache& enc,
                   HeadCache& cache) {
  const auto& L = model.layout();
  cache.pooled = enc.output.row(0);
  cache.hidden = ((cache.pooled * View(model, L.head_w)) + RowView(model, L.head_b))
                     .array()
                     .tanh();
  cache.score = cache.hidden.dot(RowView(model, L.out_w)) + model.params()[L.out_b.offset];
  return cache.score;
}

RowVector HeadBackward(const ScorerModel& model, const HeadCache& cache,
                       double d_score, std::span<double> grad) {
  const auto& L = model.layout();
  GradRowView(grad, L.out_w) += d_score * cache.hidden;
  grad[L.out_b.offset] += d_score;
  const RowVector d_a = (d_score * RowView(model, L.out_w)).cwiseProduct(
      (1.0 - cache.hidden.array().square()).matrix());
  GradView(grad, L.head_w).noalias() += cache.pooled.transpose() * d_a;
  GradRowView(grad, L.head_b) += d_a;
  return d_a * View(model, L.head_w).transpose();
}

double ScoreForward(const ScorerModel& model, std::span<const int> input,
                    ScoreCache& cache) {
  EncoderForward(model, input, cache.encoder);
  return HeadForward(model, cache.encoder, cache.head);
}

void ScoreBackward(const ScorerModel& model, const ScoreCache& cache,
                   double d_score, std::span<double> grad) {
  const RowVector d_pooled = HeadBackward(model, cache.head, d_score, grad);
  Matrix d_out = Matrix::Zero(cache.encoder.output.rows(), cache.encoder.output.cols());
  d_out.row(0) = d_pooled;
  EncoderBackward(model, cache.encoder, std::move(d_out), grad);
}

double MlmForwardBackward(const ScorerModel& model, std::span<const int> input,
                          std::span<const int> positions,
                          std::span<const int> targets, double weight,
                          std::span<double> grad) {
  if (positions.size() != targets.size())
    throw std::invalid_argument("MlmForwardBackward: positions/targets mismatch");
  const auto& L = model.layout();
  EncoderCache cache;
  EncoderForward(model, input, cache);
  const ConstMap tok = View(model, L.tok_emb);
  const ConstRowMap bias = RowView(model, L.mlm_bias);
  const bool backward = !grad.empty();
  Matrix d_out;
  if (backward) d_out = Matrix::Zero(cache.output.rows(), cache.output.cols());
  double loss = 0.0;
  for (size_t i = 0; i < positions.size(); ++i) {
    const int p = positions[i];
    if (p <= 0 || p >= static_cast<int>(input.size()))
      throw std::invalid_argument("MlmForwardBackward: position out of range");
    RowVector logits = cache.output.row(p) * tok.transpose() + bias;
    const double mx = logits.maxCoeff();
    RowVector probs = (logits.array() - mx).exp();
    const double z = probs.sum();
    loss += -(logits(targets[i]) - mx - std::log(z));
    if (!backward) continue;
    probs /= z;
    probs(targets[i]) -= 1.0;
    probs *= weight;
    d_out.row(p).noalias() += probs * tok;
    GradView(grad, L.tok_emb).noalias() += probs.transpose() * cache.output.row(p);
    GradRowView(grad, L.mlm_bias) += probs;
  }
  if (backward) EncoderBackward(model, cache, std::move(d_out), grad);
  return loss;
}

}  // namespace nbscale
