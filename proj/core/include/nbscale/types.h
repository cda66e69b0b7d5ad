// core/include/nbscale/types.h

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

#ifndef NBSCALE_TYPES_H_
#define NBSCALE_TYPES_H_

#include <optional>
#include <string>
#include <vector>

namespace nbscale {

// Word-level token sequence. Tokens are opaque and compared by exact equality.
using TokenSeq = std::vector<std::string>;

// One n-best candidate. Both scores follow the negative-log-likelihood
// convention: lower is better.
struct Hypothesis {
  TokenSeq tokens;
  double first_pass_score = 0.0;
  std::optional<double> second_pass_score;
  // Edit distance to the enclosing list's reference, once attached.
  std::optional<int> edit_dist;

  bool operator==(const Hypothesis&) const = default;
};

// A reference transcription plus its hypotheses in first-pass rank order.
struct NBestList {
  std::string utterance_id;
  TokenSeq reference;
  std::vector<Hypothesis> hyps;

  bool operator==(const NBestList&) const = default;
};

using Corpus = std::vector<NBestList>;

}  // namespace nbscale

#endif  // NBSCALE_TYPES_H_
