// core/include/nbscale/nbest.h

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

#ifndef NBSCALE_NBEST_H_
#define NBSCALE_NBEST_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "nbscale/metrics.h"
#include "nbscale/types.h"

namespace nbscale {

// Weight w of the second-pass score in s_i = s_i^f + w * s_i^s.
class InterpolationWeight {
 public:
  // Throws std::invalid_argument unless w is finite and non-negative.
  explicit InterpolationWeight(double w);
  double value() const { return w_; }

 private:
  double w_;
};

// Final scores s_i^f + w * s_i^s in hypothesis order. Throws DataError when
// any hypothesis lacks a second-pass score.
std::vector<double> Interpolate(const NBestList& list, InterpolationWeight w);

// 0-based index of the minimum interpolated score; ties go to the lowest
// index so first-pass rank is preserved.
size_t SelectBest(const NBestList& list, InterpolationWeight w);

// WER of the SelectBest choices over the corpus (WER_2P).
WerReport RescoredWer(const Corpus& corpus, InterpolationWeight w);

// Returns a copy with every hypothesis' edit_dist populated.
NBestList AttachEditDistances(NBestList list);
void AttachEditDistances(Corpus& corpus);

// JSONL n-best corpus: one object per line with fields
//   id: string, ref: [string], hyps: [{tokens: [string], fp: number,
//   sp: number|null}]
// Blank lines are skipped. Malformed records and duplicate ids throw
// DataError naming the 1-based line number.
Corpus ReadCorpus(std::istream& in);
Corpus ReadCorpus(const std::string& path);
void WriteCorpus(const Corpus& corpus, std::ostream& out);
void WriteCorpus(const Corpus& corpus, const std::string& path);

}  // namespace nbscale

#endif  // NBSCALE_NBEST_H_
