// core/src/metrics.cc

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

#include "nbscale/metrics.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nbscale/errors.h"

namespace nbscale {

namespace {

int64_t HypErrors(const NBestList& list, size_t index) {
  const Hypothesis& hyp = list.hyps[index];
  if (hyp.edit_dist) return *hyp.edit_dist;
  return EditDistance(list.reference, hyp.tokens);
}

void RequireNonEmpty(const NBestList& list) {
  if (list.hyps.empty())
    throw DataError("n-best list '" + list.utterance_id + "' has no hypotheses");
}

}  // namespace

int64_t EditDistance(const TokenSeq& ref, const TokenSeq& hyp) {
  return EditDistance<std::string>(std::span<const std::string>(ref),
                                   std::span<const std::string>(hyp));
}

double WerReport::rate() const {
  if (ref_words <= 0)
    throw DataError("WER undefined: zero reference words");
  return static_cast<double>(errors) / static_cast<double>(ref_words);
}

WerReport CorpusWer(std::span<const RefHypPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("CorpusWer: no pairs");
  WerReport report;
  for (const auto& [ref, hyp] : pairs) {
    report.errors += EditDistance(ref, hyp);
    report.ref_words += static_cast<int64_t>(ref.size());
  }
  if (report.ref_words == 0)
    throw DataError("CorpusWer: total reference length is zero");
  return report;
}

size_t OracleIndex(const NBestList& list) {
  RequireNonEmpty(list);
  size_t best = 0;
  int64_t best_err = HypErrors(list, 0);
  for (size_t i = 1; i < list.hyps.size(); ++i) {
    const int64_t err = HypErrors(list, i);
    if (err < best_err) {
      best_err = err;
      best = i;
    }
  }
  return best;
}

size_t FirstPassIndex(const NBestList& list) {
  RequireNonEmpty(list);
  size_t best = 0;
  for (size_t i = 1; i < list.hyps.size(); ++i) {
    if (list.hyps[i].first_pass_score < list.hyps[best].first_pass_score)
      best = i;
  }
  return best;
}

WerReport SelectionWer(const Corpus& corpus, std::span<const size_t> selection) {
  if (selection.size() != corpus.size())
    throw std::invalid_argument("SelectionWer: selection size mismatch");
  WerReport report;
  for (size_t u = 0; u < corpus.size(); ++u) {
    RequireNonEmpty(corpus[u]);
    if (selection[u] >= corpus[u].hyps.size())
      throw std::out_of_range("SelectionWer: index out of range");
    report.errors += HypErrors(corpus[u], selection[u]);
    report.ref_words += static_cast<int64_t>(corpus[u].reference.size());
  }
  return report;
}

WerReport OracleWer(const Corpus& corpus) {
  std::vector<size_t> selection;
  selection.reserve(corpus.size());
  for (const auto& list : corpus) selection.push_back(OracleIndex(list));
  return SelectionWer(corpus, selection);
}

WerReport FirstPassWer(const Corpus& corpus) {
  std::vector<size_t> selection;
  selection.reserve(corpus.size());
  for (const auto& list : corpus) selection.push_back(FirstPassIndex(list));
  return SelectionWer(corpus, selection);
}

double NormalizedWer(double wer_2p, double wer_1p, double wer_oracle) {
  if (!std::isfinite(wer_2p) || !std::isfinite(wer_1p) ||
      !std::isfinite(wer_oracle))
    throw DataError("NormalizedWer: non-finite input");
  if (!(wer_1p > wer_oracle))
    throw DataError("NormalizedWer: first-pass WER must exceed oracle WER");
  return (wer_2p - wer_oracle) / (wer_1p - wer_oracle);
}

}  // namespace nbscale
