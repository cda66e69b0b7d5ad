// core/include/nbscale/encoder.h

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

#ifndef NBSCALE_ENCODER_H_
#define NBSCALE_ENCODER_H_

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nbscale/scorer.h"

namespace nbscale {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Intermediates of one layer normalization, kept for the backward pass.
struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

struct BlockCache {
  Matrix input;                  // T x h
  Matrix q, k, v;                // T x h
  std::vector<Matrix> attention; // per head, T x T (post-softmax)
  Matrix context;                // T x h, concatenated heads
  LayerNormCache ln1;
  Matrix mid;                    // T x h, output of the first layer norm
  Matrix pre_act;                // T x ffn
  Matrix act;                    // T x ffn
  LayerNormCache ln2;
};

struct EncoderCache {
  std::vector<int> input;  // classification token first
  LayerNormCache emb_ln;
  std::vector<BlockCache> blocks;
  Matrix output;           // T x h, final hidden states
};

struct HeadCache {
  RowVector pooled;  // final state of the classification token
  RowVector hidden;  // tanh activation
  double score = 0.0;
};

// Post-norm transformer encoder over a prepared input (see PrepareInput).
void EncoderForward(const ScorerModel& model, std::span<const int> input,
                    EncoderCache& cache);

// Accumulates dLoss/dparams into grad given dLoss/d(output).
void EncoderBackward(const ScorerModel& model, const EncoderCache& cache,
                     Matrix d_output, std::span<double> grad);

// Feed-forward score head on the classification token.
double HeadForward(const ScorerModel& model, const EncoderCache& enc,
                   HeadCache& cache);
// Accumulates head gradients into grad; returns dLoss/d(pooled).
RowVector HeadBackward(const ScorerModel& model, const HeadCache& cache,
                       double d_score, std::span<double> grad);

struct ScoreCache {
  EncoderCache encoder;
  HeadCache head;
};

double ScoreForward(const ScorerModel& model, std::span<const int> input,
                    ScoreCache& cache);
void ScoreBackward(const ScorerModel& model, const ScoreCache& cache,
                   double d_score, std::span<double> grad);

// Masked-token cross-entropy over the listed positions, with output
// weights tied to the token embeddings. Returns the summed loss; when grad
// is non-empty, accumulates weight * dLoss/dparams.
double MlmForwardBackward(const ScorerModel& model, std::span<const int> input,
                          std::span<const int> positions,
                          std::span<const int> targets, double weight,
                          std::span<double> grad);

}  // namespace nbscale

#endif  // NBSCALE_ENCODER_H_
