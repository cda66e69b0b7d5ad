// core/include/nbscale/synth.h

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

#ifndef NBSCALE_SYNTH_H_
#define NBSCALE_SYNTH_H_

#include <cstdint>
#include <vector>

#include "nbscale/rng.h"
#include "nbscale/types.h"

namespace nbscale {

struct SynthConfig {
  int vocab_size = 20;
  int successors = 3;  // allowed next words per word in the source
  int min_len = 4;
  int max_len = 12;
  int train_size = 1000;
  int dev_size = 2000;
  int test_size = 2000;
  int nbest_depth = 10;
  double p_sub = 0.15;
  double p_ins = 0.05;
  double p_del = 0.05;
  double score_slope = 0.65;  // first-pass score = slope * eps + noise * N(0,1)
  double score_noise = 1.0;
  int max_retries = 8;
  uint64_t seed = 1;

  // Throws std::invalid_argument on out-of-range fields.
  void Validate() const;
};

// Order-1 Markov source over tokens "w0".."w<V-1>". Every word has a fixed
// small set of successors with Zipf-like weights, which is the regularity
// a second-pass model can learn and a corrupted hypothesis violates.
class MarkovSource {
 public:
  MarkovSource(const SynthConfig& config);

  std::vector<int> SampleIds(Rng& rng) const;
  TokenSeq Sample(Rng& rng) const;

  // Probability of `next` following `prev` under the source.
  double TransitionProb(int prev, int next) const;
  const std::vector<int>& Successors(int word) const { return successors_[word]; }

 private:
  int vocab_size_, min_len_, max_len_;
  std::vector<std::vector<int>> successors_;
  std::vector<std::vector<double>> cumulative_;
};

struct SynthCorpora {
  Corpus train, dev, test;
  // Set when no corruption is configured, so oracle and first-pass WER
  // coincide and WER_norm is undefined.
  bool degenerate_margin = false;
  int attempts = 1;
};

// Generates the three splits with edit distances attached. Hypotheses are
// stochastic edit corruptions of the reference, sorted by the simulated
// first-pass score. Regenerates with a new sub-seed until oracle WER is
// below first-pass WER on dev and test; throws DataError once max_retries
// is exhausted.
SynthCorpora SynthCorpus(const SynthConfig& config);

// Reference-only sentences from the same source, as token ids, for masked
// pretraining. Independent of the SynthCorpus sample streams.
std::vector<std::vector<int>> PretrainingCorpus(const SynthConfig& config,
                                                int sentences, uint64_t seed);

}  // namespace nbscale

#endif  // NBSCALE_SYNTH_H_
