// core/include/nbscale/scorer.h

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

#ifndef NBSCALE_SCORER_H_
#define NBSCALE_SCORER_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nbscale/types.h"

namespace nbscale {

// Ids [0, size) are regular tokens; the three ids after them are reserved
// for the classification, mask and unknown tokens.
inline constexpr int kNumSpecialTokens = 3;

class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws std::invalid_argument on duplicate tokens.
  explicit Vocabulary(std::vector<std::string> tokens);
  // Tokens "w0" .. "w<size-1>", the naming used by the synthetic generator.
  static Vocabulary Synthetic(int size);

  int size() const { return static_cast<int>(tokens_.size()); }
  int cls_id() const { return size(); }
  int mask_id() const { return size() + 1; }
  int unk_id() const { return size() + 2; }

  // Unknown tokens map to unk_id().
  int Id(const std::string& token) const;
  std::vector<int> Encode(const TokenSeq& tokens) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct ScorerConfig {
  int vocab_size = 64;  // regular tokens, excluding the reserved ones
  int hidden = 16;
  int layers = 1;
  int heads = 2;
  int ffn_dim = 32;
  int max_len = 32;     // tokens after the classification token
  uint64_t seed = 1;

  // Throws std::invalid_argument on non-positive dimensions or when hidden
  // is not divisible by heads.
  void Validate() const;

  int model_vocab() const { return vocab_size + kNumSpecialTokens; }

  // Closed-form counts. Embedding parameters are the token and position
  // tables, the embedding layer norm and the masked-token output bias;
  // everything else (encoder blocks and score head) is the model size N.
  int64_t NonEmbeddingParams() const;
  int64_t EmbeddingParams() const;
  int64_t TotalParams() const { return NonEmbeddingParams() + EmbeddingParams(); }

  bool operator==(const ScorerConfig&) const = default;
};

// A view of one tensor inside the flat parameter vector; row-major.
struct TensorRef {
  size_t offset = 0;
  size_t rows = 0;
  size_t cols = 0;
  size_t size() const { return rows * cols; }
};

struct LayerTensors {
  TensorRef wq, bq, wk, bk, wv, bv, wo, bo;
  TensorRef ln1_g, ln1_b;
  TensorRef w1, b1, w2, b2;
  TensorRef ln2_g, ln2_b;
};

struct ParamLayout {
  TensorRef tok_emb, pos_emb, emb_ln_g, emb_ln_b, mlm_bias;
  std::vector<LayerTensors> layers;
  TensorRef head_w, head_b, out_w, out_b;
  size_t embedding_end = 0;  // [0, embedding_end) holds embedding params
  size_t head_begin = 0;     // [head_begin, total) holds the score head
  size_t total = 0;

  static ParamLayout For(const ScorerConfig& config);
  // Every tensor with a descriptive name, in storage order.
  std::vector<std::pair<std::string, TensorRef>> Named() const;
};

// Pooled-encoder sentence scorer. Parameters live in one flat double
// vector so that optimizers, checkpoints and gradient checks can treat
// them uniformly.
class ScorerModel {
 public:
  ScorerModel(ScorerConfig config, Vocabulary vocab);

  const ScorerConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const ParamLayout& layout() const { return layout_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Counted from the layout; equals config().NonEmbeddingParams().
  int64_t NonEmbeddingParams() const {
    return static_cast<int64_t>(layout_.total - layout_.embedding_end);
  }

  // Bit-identical configuration, vocabulary and parameters.
  bool operator==(const ScorerModel& other) const;

 private:
  ScorerConfig config_;
  Vocabulary vocab_;
  ParamLayout layout_;
  std::vector<double> params_;
};

// Deterministic random initialization from config.seed. The vocabulary
// defaults to Vocabulary::Synthetic(config.vocab_size).
ScorerModel InitModel(const ScorerConfig& config);
ScorerModel InitModel(const ScorerConfig& config, Vocabulary vocab);

// Redraws only the score head from `seed`.
void ReinitHead(ScorerModel& model, uint64_t seed);

// Classification token followed by at most max_len ids; ids outside the
// regular vocabulary become the unknown id. Sets *truncated when the input
// was cut.
std::vector<int> PrepareInput(const ScorerModel& model, std::span<const int> ids,
                              bool* truncated = nullptr);

// Second-pass score of one token sequence (lower = better). Inputs longer
// than max_len are truncated with a one-time warning on stderr.
double Score(const ScorerModel& model, const TokenSeq& tokens);
double ScoreIds(const ScorerModel& model, std::span<const int> ids);

// Versioned binary checkpoint: magic, version, JSON header with config and
// vocabulary, then the raw little-endian parameter doubles.
void SaveCheckpoint(const ScorerModel& model, std::ostream& out);
void SaveCheckpoint(const ScorerModel& model, const std::string& path);
ScorerModel LoadCheckpoint(std::istream& in);
ScorerModel LoadCheckpoint(const std::string& path);

}  // namespace nbscale

#endif  // NBSCALE_SCORER_H_
