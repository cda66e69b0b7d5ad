// core/src/scorer.cc

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

#include "nbscale/scorer.h"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "json.hpp"
#include "nbscale/encoder.h"
#include "nbscale/errors.h"
#include "nbscale/rng.h"

namespace nbscale {

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (size_t i = 0; i < tokens_.size(); ++i)
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate vocabulary token '" + tokens_[i] + "'");
}

Vocabulary Vocabulary::Synthetic(int size) {
  std::vector<std::string> tokens;
  tokens.reserve(size);
  for (int i = 0; i < size; ++i) tokens.push_back("w" + std::to_string(i));
  return Vocabulary(std::move(tokens));
}

int Vocabulary::Id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_id() : it->second;
}

std::vector<int> Vocabulary::Encode(const TokenSeq& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(Id(t));
  return ids;
}

void ScorerConfig::Validate() const {
  if (vocab_size < 1 || hidden < 1 || layers < 1 || heads < 1 || ffn_dim < 1 ||
      max_len < 1)
    throw std::invalid_argument("scorer config: all dimensions must be >= 1");
  if (hidden % heads != 0)
    throw std::invalid_argument("scorer config: hidden must be divisible by heads");
}

int64_t ScorerConfig::NonEmbeddingParams() const {
  const int64_t h = hidden, f = ffn_dim;
  // attention 4h^2+4h, feed-forward 2hf+f+h, two layer norms 4h
  const int64_t per_layer = 4 * h * h + 2 * h * f + 9 * h + f;
  // tanh projection h^2+h, output h+1
  const int64_t head = h * h + 2 * h + 1;
  return layers * per_layer + head;
}

int64_t ScorerConfig::EmbeddingParams() const {
  const int64_t h = hidden;
  const int64_t v = model_vocab();
  return v * h + (max_len + 1) * h + 2 * h + v;
}

ParamLayout ParamLayout::For(const ScorerConfig& config) {
  config.Validate();
  ParamLayout L;
  size_t cursor = 0;
  auto take = [&cursor](size_t rows, size_t cols) {
    TensorRef t{cursor, rows, cols};
    cursor += rows * cols;
    return t;
  };
  const size_t h = config.hidden, f = config.ffn_dim;
  const size_t v = config.model_vocab();
  L.tok_emb = take(v, h);
  L.pos_emb = take(config.max_len + 1, h);
  L.emb_ln_g = take(1, h);
  L.emb_ln_b = take(1, h);
  L.mlm_bias = take(1, v);
  L.embedding_end = cursor;
  for (int l = 0; l < config.layers; ++l) {
    LayerTensors t;
    t.wq = take(h, h);
    t.bq = take(1, h);
    t.wk = take(h, h);
    t.bk = take(1, h);
    t.wv = take(h, h);
    t.bv = take(1, h);
    t.wo = take(h, h);
    t.bo = take(1, h);
    t.ln1_g = take(1, h);
    t.ln1_b = take(1, h);
    t.w1 = take(h, f);
    t.b1 = take(1, f);
    t.w2 = take(f, h);
    t.b2 = take(1, h);
    t.ln2_g = take(1, h);
    t.ln2_b = take(1, h);
    L.layers.push_back(t);
  }
  L.head_begin = cursor;
  L.head_w = take(h, h);
  L.head_b = take(1, h);
  L.out_w = take(1, h);
  L.out_b = take(1, 1);
  L.total = cursor;
  return L;
}

std::vector<std::pair<std::string, TensorRef>> ParamLayout::Named() const {
  std::vector<std::pair<std::string, TensorRef>> out = {
      {"tok_emb", tok_emb}, {"pos_emb", pos_emb}, {"emb_ln_g", emb_ln_g},
      {"emb_ln_b", emb_ln_b}, {"mlm_bias", mlm_bias}};
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& t = layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    for (const auto& [name, ref] :
         {std::pair{"wq", t.wq}, {"bq", t.bq}, {"wk", t.wk}, {"bk", t.bk},
          {"wv", t.wv}, {"bv", t.bv}, {"wo", t.wo}, {"bo", t.bo},
          {"ln1_g", t.ln1_g}, {"ln1_b", t.ln1_b}, {"w1", t.w1}, {"b1", t.b1},
          {"w2", t.w2}, {"b2", t.b2}, {"ln2_g", t.ln2_g}, {"ln2_b", t.ln2_b}})
      out.emplace_back(p + name, ref);
  }
  out.emplace_back("head_w", head_w);
  out.emplace_back("head_b", head_b);
  out.emplace_back("out_w", out_w);
  out.emplace_back("out_b", out_b);
  return out;
}

ScorerModel::ScorerModel(ScorerConfig config, Vocabulary vocab)
    : config_(config), vocab_(std::move(vocab)), layout_(ParamLayout::For(config_)) {
  if (vocab_.size() != config_.vocab_size)
    throw std::invalid_argument("vocabulary size does not match scorer config");
  params_.assign(layout_.total, 0.0);
}

bool ScorerModel::operator==(const ScorerModel& other) const {
  if (!(config_ == other.config_) || !(vocab_ == other.vocab_)) return false;
  if (params_.size() != other.params_.size()) return false;
  return std::memcmp(params_.data(), other.params_.data(),
                     params_.size() * sizeof(double)) == 0;
}

namespace {

void FillNormal(std::span<double> p, const TensorRef& t, double stddev, Rng& rng) {
  for (size_t i = 0; i < t.size(); ++i) p[t.offset + i] = stddev * rng.Normal();
}

void FillConstant(std::span<double> p, const TensorRef& t, double value) {
  for (size_t i = 0; i < t.size(); ++i) p[t.offset + i] = value;
}

void InitHead(ScorerModel& model, Rng& rng) {
  const auto& L = model.layout();
  const double h = model.config().hidden;
  auto p = model.params();
  FillNormal(p, L.head_w, 1.0 / std::sqrt(h), rng);
  FillConstant(p, L.head_b, 0.0);
  FillNormal(p, L.out_w, 1.0 / std::sqrt(h), rng);
  FillConstant(p, L.out_b, 0.0);
}

}  // namespace

ScorerModel InitModel(const ScorerConfig& config) {
  config.Validate();
  return InitModel(config, Vocabulary::Synthetic(config.vocab_size));
}

ScorerModel InitModel(const ScorerConfig& config, Vocabulary vocab) {
  ScorerModel model(config, std::move(vocab));
  const auto& L = model.layout();
  auto p = model.params();
  Rng rng(CombineSeeds({config.seed, HashString("scorer-init")}));
  FillNormal(p, L.tok_emb, 1.0, rng);
  FillNormal(p, L.pos_emb, 1.0, rng);
  FillConstant(p, L.emb_ln_g, 1.0);
  FillConstant(p, L.emb_ln_b, 0.0);
  FillConstant(p, L.mlm_bias, 0.0);
  const double h = config.hidden, f = config.ffn_dim;
  for (const auto& t : L.layers) {
    for (const TensorRef* w : {&t.wq, &t.wk, &t.wv, &t.wo})
      FillNormal(p, *w, 1.0 / std::sqrt(h), rng);
    for (const TensorRef* b : {&t.bq, &t.bk, &t.bv, &t.bo, &t.ln1_b, &t.b1,
                               &t.b2, &t.ln2_b})
      FillConstant(p, *b, 0.0);
    FillConstant(p, t.ln1_g, 1.0);
    FillConstant(p, t.ln2_g, 1.0);
    FillNormal(p, t.w1, 1.0 / std::sqrt(h), rng);
    FillNormal(p, t.w2, 1.0 / std::sqrt(f), rng);
  }
  InitHead(model, rng);
  return model;
}

void ReinitHead(ScorerModel& model, uint64_t seed) {
  Rng rng(CombineSeeds({seed, HashString("scorer-head")}));
  InitHead(model, rng);
}

std::vector<int> PrepareInput(const ScorerModel& model, std::span<const int> ids,
                              bool* truncated) {
  const auto& vocab = model.vocab();
  const size_t max_len = model.config().max_len;
  const size_t n = std::min(ids.size(), max_len);
  if (truncated) *truncated = ids.size() > max_len;
  std::vector<int> input;
  input.reserve(n + 1);
  input.push_back(vocab.cls_id());
  for (size_t i = 0; i < n; ++i) {
    const int id = ids[i];
    input.push_back(id >= 0 && id < vocab.size() ? id : vocab.unk_id());
  }
  return input;
}

double ScoreIds(const ScorerModel& model, std::span<const int> ids) {
  static std::atomic<bool> warned{false};
  bool truncated = false;
  const std::vector<int> input = PrepareInput(model, ids, &truncated);
  if (truncated && !warned.exchange(true))
    std::cerr << "WARNING: input of length " << ids.size()
              << " truncated to max_len " << model.config().max_len
              << " (further truncations not reported)\n";
  ScoreCache cache;
  return ScoreForward(model, input, cache);
}

double Score(const ScorerModel& model, const TokenSeq& tokens) {
  return ScoreIds(model, model.vocab().Encode(tokens));
}

namespace {

constexpr char kMagic[8] = {'N', 'B', 'S', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void WritePod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T ReadPod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint truncated");
  return v;
}

}  // namespace

void SaveCheckpoint(const ScorerModel& model, std::ostream& out) {
  const auto& c = model.config();
  nlohmann::json header = {
      {"vocab_size", c.vocab_size}, {"hidden", c.hidden},
      {"layers", c.layers},         {"heads", c.heads},
      {"ffn_dim", c.ffn_dim},       {"max_len", c.max_len},
      {"seed", c.seed},             {"vocab", model.vocab().tokens()}};
  const std::string text = header.dump();
  out.write(kMagic, sizeof(kMagic));
  WritePod(out, kCheckpointVersion);
  WritePod(out, static_cast<uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto p = model.params();
  WritePod(out, static_cast<uint64_t>(p.size()));
  out.write(reinterpret_cast<const char*>(p.data()),
            static_cast<std::streamsize>(p.size() * sizeof(double)));
  if (!out) throw DataError("checkpoint write failed");
}

void SaveCheckpoint(const ScorerModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  SaveCheckpoint(model, out);
}

ScorerModel LoadCheckpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a scorer checkpoint (bad magic)");
  const auto version = ReadPod<uint32_t>(in);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = ReadPod<uint64_t>(in);
  if (header_len > (1u << 30)) throw DataError("checkpoint header too large");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError("checkpoint truncated");
  ScorerConfig c;
  std::vector<std::string> tokens;
  try {
    const auto header = nlohmann::json::parse(text);
    c.vocab_size = header.at("vocab_size").get<int>();
    c.hidden = header.at("hidden").get<int>();
    c.layers = header.at("layers").get<int>();
    c.heads = header.at("heads").get<int>();
    c.ffn_dim = header.at("ffn_dim").get<int>();
    c.max_len = header.at("max_len").get<int>();
    c.seed = header.at("seed").get<uint64_t>();
    tokens = header.at("vocab").get<std::vector<std::string>>();
    c.Validate();
  } catch (const std::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }
  ScorerModel model(c, Vocabulary(std::move(tokens)));
  const auto count = ReadPod<uint64_t>(in);
  if (count != model.params().size())
    throw DataError("checkpoint parameter count does not match its config");
  in.read(reinterpret_cast<char*>(model.params().data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw DataError("checkpoint truncated");
  return model;
}

ScorerModel LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  return LoadCheckpoint(in);
}

}  // namespace nbscale
