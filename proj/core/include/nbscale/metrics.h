// core/include/nbscale/metrics.h

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

#ifndef NBSCALE_METRICS_H_
#define NBSCALE_METRICS_H_

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nbscale/types.h"

namespace nbscale {

// Levenshtein distance with unit insertion, deletion and substitution costs.
// Uses a single rolling row, O(|ref| * |hyp|) time and O(|hyp|) memory.
template <typename T>
int64_t EditDistance(std::span<const T> ref, std::span<const T> hyp) {
  std::vector<int64_t> row(hyp.size() + 1);
  for (size_t j = 0; j <= hyp.size(); ++j) row[j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= ref.size(); ++i) {
    int64_t diag = row[0];
    row[0] = static_cast<int64_t>(i);
    for (size_t j = 1; j <= hyp.size(); ++j) {
      const int64_t up = row[j];
      const int64_t sub = diag + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[hyp.size()];
}

int64_t EditDistance(const TokenSeq& ref, const TokenSeq& hyp);

// Error counts carried as integers; the rate is derived on demand so that
// aggregation across corpora is exact.
struct WerReport {
  int64_t errors = 0;
  int64_t ref_words = 0;

  // errors / ref_words. Throws DataError when ref_words == 0.
  double rate() const;

  WerReport& operator+=(const WerReport& other) {
    errors += other.errors;
    ref_words += other.ref_words;
    return *this;
  }
  bool operator==(const WerReport&) const = default;
};

using RefHypPair = std::pair<TokenSeq, TokenSeq>;

// Throws std::invalid_argument on an empty pair list and DataError when the
// total reference length is zero.
WerReport CorpusWer(std::span<const RefHypPair> pairs);

// Index of the hypothesis with minimum edit distance (ties -> lowest index).
size_t OracleIndex(const NBestList& list);
// Index of the hypothesis with minimum first-pass score (ties -> lowest index).
size_t FirstPassIndex(const NBestList& list);

// WER of an arbitrary per-utterance selection; selection[u] indexes
// corpus[u].hyps.
WerReport SelectionWer(const Corpus& corpus, std::span<const size_t> selection);

WerReport OracleWer(const Corpus& corpus);
WerReport FirstPassWer(const Corpus& corpus);

// (wer_2p - wer_oracle) / (wer_1p - wer_oracle). Throws DataError when
// wer_1p <= wer_oracle.
double NormalizedWer(double wer_2p, double wer_1p, double wer_oracle);

}  // namespace nbscale

#endif  // NBSCALE_METRICS_H_
