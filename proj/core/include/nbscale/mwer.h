// core/include/nbscale/mwer.h

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

#ifndef NBSCALE_MWER_H_
#define NBSCALE_MWER_H_

#include <span>
#include <vector>

namespace nbscale {

// One n-best list reduced to what the MWER loss needs: a score per
// hypothesis (lower = better) and its edit distance to the reference.
struct MwerInstance {
  std::vector<double> scores;
  std::vector<double> eps;
};

struct MwerResult {
  std::vector<double> posteriors;
  double mean_eps = 0.0;
  double loss = 0.0;
  // dL/ds_i; sums to zero.
  std::vector<double> grad;
};

// P_i = exp(-s_i) / sum_j exp(-s_j), shifted by the minimum score before
// exponentiation. Throws std::invalid_argument on empty input or any
// non-finite score.
std::vector<double> Posteriors(std::span<const double> scores);

double MeanEditDistance(std::span<const double> eps);

// Expected relative word errors: sum_i P_i * (eps_i - mean(eps)).
double MwerLoss(const MwerInstance& instance);

// Closed form dL/ds_i = P_i * (L - (eps_i - mean(eps))).
std::vector<double> MwerGradient(const MwerInstance& instance);

// Posteriors, mean, loss and gradient in one pass.
MwerResult ComputeMwer(const MwerInstance& instance);

}  // namespace nbscale

#endif  // NBSCALE_MWER_H_
