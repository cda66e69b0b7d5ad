// core/src/synth.cc

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

#include "nbscale/synth.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "nbscale/errors.h"
#include "nbscale/metrics.h"

namespace nbscale {

namespace {

bool IsProbability(double p) { return p >= 0.0 && p <= 1.0; }

std::string Word(int id) { return "w" + std::to_string(id); }

TokenSeq ToTokens(const std::vector<int>& ids) {
  TokenSeq out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(Word(id));
  return out;
}

std::vector<int> Corrupt(const std::vector<int>& ref, const SynthConfig& c, Rng& rng) {
  std::vector<int> out;
  out.reserve(ref.size() + 4);
  auto random_other = [&](int avoid) {
    int t = static_cast<int>(rng.UniformInt(c.vocab_size - 1));
    return t >= avoid ? t + 1 : t;
  };
  for (int tok : ref) {
    const double r = rng.Uniform();
    if (r < c.p_del) {
      // dropped
    } else if (r < c.p_del + c.p_sub) {
      out.push_back(random_other(tok));
    } else {
      out.push_back(tok);
    }
    if (rng.Bernoulli(c.p_ins)) out.push_back(static_cast<int>(rng.UniformInt(c.vocab_size)));
  }
  return out;
}

NBestList MakeList(const MarkovSource& source, const SynthConfig& c, Rng& rng,
                   std::string id) {
  const std::vector<int> ref = source.SampleIds(rng);
  NBestList list;
  list.utterance_id = std::move(id);
  list.reference = ToTokens(ref);
  const bool any_corruption = c.p_sub > 0.0 || c.p_ins > 0.0 || c.p_del > 0.0;
  std::set<std::vector<int>> seen;
  for (int k = 0; k < c.nbest_depth; ++k) {
    std::vector<int> hyp = Corrupt(ref, c, rng);
    for (int attempt = 0; any_corruption && attempt < 50 && seen.count(hyp); ++attempt)
      hyp = Corrupt(ref, c, rng);
    seen.insert(hyp);
    Hypothesis h;
    h.tokens = ToTokens(hyp);
    const int eps = static_cast<int>(EditDistance<int>(ref, hyp));
    h.edit_dist = eps;
    h.first_pass_score = c.score_slope * eps + c.score_noise * rng.Normal();
    list.hyps.push_back(std::move(h));
  }
  std::stable_sort(list.hyps.begin(), list.hyps.end(),
                   [](const Hypothesis& a, const Hypothesis& b) {
                     return a.first_pass_score < b.first_pass_score;
                   });
  return list;
}

Corpus MakeSplit(const MarkovSource& source, const SynthConfig& c, Rng& rng,
                 const char* name, int size) {
  Corpus corpus;
  corpus.reserve(size);
  char id[64];
  for (int i = 0; i < size; ++i) {
    std::snprintf(id, sizeof(id), "%s-%06d", name, i);
    corpus.push_back(MakeList(source, c, rng, id));
  }
  return corpus;
}

bool HasMargin(const Corpus& corpus) {
  return OracleWer(corpus).errors < FirstPassWer(corpus).errors;
}

}  // namespace

void SynthConfig::Validate() const {
  if (vocab_size < 2) throw std::invalid_argument("synth: vocab_size must be >= 2");
  if (successors < 1 || successors > vocab_size)
    throw std::invalid_argument("synth: successors must lie in [1, vocab_size]");
  if (min_len < 1 || max_len < min_len)
    throw std::invalid_argument("synth: need 1 <= min_len <= max_len");
  if (train_size < 0 || dev_size < 1 || test_size < 1)
    throw std::invalid_argument("synth: dev and test must be non-empty");
  if (nbest_depth < 2) throw std::invalid_argument("synth: nbest_depth must be >= 2");
  if (!IsProbability(p_sub) || !IsProbability(p_ins) || !IsProbability(p_del) ||
      p_sub + p_del > 1.0)
    throw std::invalid_argument("synth: corruption rates must be probabilities");
  if (!(score_slope > 0.0) || !(score_noise >= 0.0))
    throw std::invalid_argument("synth: need score_slope > 0 and score_noise >= 0");
  if (max_retries < 1) throw std::invalid_argument("synth: max_retries must be >= 1");
}

MarkovSource::MarkovSource(const SynthConfig& config)
    : vocab_size_(config.vocab_size),
      min_len_(config.min_len),
      max_len_(config.max_len),
      successors_(config.vocab_size),
      cumulative_(config.vocab_size) {
  config.Validate();
  Rng rng(CombineSeeds({config.seed, HashString("markov-source")}));
  std::vector<int> pool(vocab_size_);
  for (int w = 0; w < vocab_size_; ++w) {
    std::iota(pool.begin(), pool.end(), 0);
    rng.Shuffle(std::span<int>(pool));
    successors_[w].assign(pool.begin(), pool.begin() + config.successors);
    double total = 0.0;
    for (int r = 0; r < config.successors; ++r) {
      total += 1.0 / (r + 1.0);
      cumulative_[w].push_back(total);
    }
    for (double& v : cumulative_[w]) v /= total;
  }
}

std::vector<int> MarkovSource::SampleIds(Rng& rng) const {
  const int len = min_len_ + static_cast<int>(rng.UniformInt(max_len_ - min_len_ + 1));
  std::vector<int> ids;
  ids.reserve(len);
  ids.push_back(static_cast<int>(rng.UniformInt(vocab_size_)));
  while (static_cast<int>(ids.size()) < len) {
    const auto& cum = cumulative_[ids.back()];
    const double u = rng.Uniform();
    size_t r = 0;
    while (r + 1 < cum.size() && u >= cum[r]) ++r;
    ids.push_back(successors_[ids.back()][r]);
  }
  return ids;
}

TokenSeq MarkovSource::Sample(Rng& rng) const { return ToTokens(SampleIds(rng)); }

double MarkovSource::TransitionProb(int prev, int next) const {
  const auto& succ = successors_.at(prev);
  const auto& cum = cumulative_[prev];
  for (size_t r = 0; r < succ.size(); ++r)
    if (succ[r] == next) return cum[r] - (r == 0 ? 0.0 : cum[r - 1]);
  return 0.0;
}

SynthCorpora SynthCorpus(const SynthConfig& config) {
  config.Validate();
  const MarkovSource source(config);
  const bool degenerate = config.p_sub == 0.0 && config.p_ins == 0.0 && config.p_del == 0.0;
  for (int attempt = 1; attempt <= config.max_retries; ++attempt) {
    const uint64_t sub = CombineSeeds({config.seed, HashString("synth-corpus"),
                                       static_cast<uint64_t>(attempt)});
    Rng train_rng(CombineSeeds({sub, 1}));
    Rng dev_rng(CombineSeeds({sub, 2}));
    Rng test_rng(CombineSeeds({sub, 3}));
    SynthCorpora out;
    out.train = MakeSplit(source, config, train_rng, "train", config.train_size);
    out.dev = MakeSplit(source, config, dev_rng, "dev", config.dev_size);
    out.test = MakeSplit(source, config, test_rng, "test", config.test_size);
    out.attempts = attempt;
    if (degenerate) {
      out.degenerate_margin = true;
      return out;
    }
    if (HasMargin(out.dev) && HasMargin(out.test)) return out;
  }
  throw DataError("synth: oracle WER did not fall below first-pass WER after " +
                  std::to_string(config.max_retries) + " attempts");
}

std::vector<std::vector<int>> PretrainingCorpus(const SynthConfig& config,
                                                int sentences, uint64_t seed) {
  const MarkovSource source(config);
  Rng rng(CombineSeeds({config.seed, seed, HashString("pretrain-corpus")}));
  std::vector<std::vector<int>> out;
  out.reserve(sentences);
  for (int i = 0; i < sentences; ++i) out.push_back(source.SampleIds(rng));
  return out;
}

}  // namespace nbscale
