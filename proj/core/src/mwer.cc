// core/src/mwer.cc

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

#include "nbscale/mwer.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nbscale {

namespace {

void Validate(const MwerInstance& instance) {
  if (instance.scores.empty())
    throw std::invalid_argument("MWER instance must have at least one hypothesis");
  if (instance.scores.size() != instance.eps.size())
    throw std::invalid_argument("MWER instance: scores/eps length mismatch");
  for (double e : instance.eps)
    if (!std::isfinite(e) || e < 0.0)
      throw std::invalid_argument("MWER instance: eps must be finite and >= 0");
}

}  // namespace

std::vector<double> Posteriors(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("Posteriors: empty scores");
  double min_score = scores[0];
  for (double s : scores) {
    if (!std::isfinite(s))
      throw std::invalid_argument("Posteriors: non-finite score");
    min_score = std::min(min_score, s);
  }
  std::vector<double> p(scores.size());
  double total = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(-(scores[i] - min_score));
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double MeanEditDistance(std::span<const double> eps) {
  if (eps.empty()) throw std::invalid_argument("MeanEditDistance: empty input");
  double sum = 0.0;
  for (double e : eps) sum += e;
  return sum / static_cast<double>(eps.size());
}

MwerResult ComputeMwer(const MwerInstance& instance) {
  Validate(instance);
  MwerResult r;
  r.posteriors = Posteriors(instance.scores);
  r.mean_eps = MeanEditDistance(instance.eps);
  const size_t n = instance.scores.size();
  for (size_t i = 0; i < n; ++i)
    r.loss += r.posteriors[i] * (instance.eps[i] - r.mean_eps);
  r.grad.resize(n);
  for (size_t i = 0; i < n; ++i)
    r.grad[i] = r.posteriors[i] * (r.loss - (instance.eps[i] - r.mean_eps));
  return r;
}

double MwerLoss(const MwerInstance& instance) {
  return ComputeMwer(instance).loss;
}

std::vector<double> MwerGradient(const MwerInstance& instance) {
  return ComputeMwer(instance).grad;
}

}  // namespace nbscale
