// core/include/nbscale/scaling.h

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

#ifndef NBSCALE_SCALING_H_
#define NBSCALE_SCALING_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nbscale {

// WER_norm = (d_c / D)^alpha_d for models trained from scratch.
struct ScratchLaw {
  double d_c = 1.0;
  double alpha_d = 1.0;
  std::string data_unit = "utterances";

  // Throws std::invalid_argument unless both parameters are finite and > 0.
  void Validate() const;
};

// WER_norm = (d_c / (k D^alpha N^beta))^alpha_d for pretrained models, with
// the effective transferred data D_T = k D^alpha N^beta standing in for D.
struct TransferLaw {
  double k = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  ScratchLaw base;

  void Validate() const;
};

// Constants fitted on the full-scale rescoring experiments.
ScratchLaw PublishedScratchLaw();
TransferLaw PublishedTransferLaw();

struct ObservationPoint {
  double d = 0.0;
  std::optional<double> n;
  double wer_norm = 0.0;
};

// Predictions. All throw std::invalid_argument on non-positive sizes.
double PredictScratch(const ScratchLaw& law, double d);
double PredictTransfer(const TransferLaw& law, double d, double n);
double EffectiveData(const TransferLaw& law, double d, double n);
// Data multiplier with the same effect as multiplying model size by
// model_factor: model_factor^(beta / alpha).
double DataEquivalentFactor(const TransferLaw& law, double model_factor);

// Regime warnings for a prediction: WER_norm above 1 (no improvement over
// the first pass) or sizes outside the range the law was fitted on.
struct FitRange {
  double d_min = 0.0, d_max = 0.0;
  std::optional<double> n_min, n_max;
};
std::vector<std::string> RegimeWarnings(double prediction, double d,
                                        std::optional<double> n,
                                        const std::optional<FitRange>& range);

struct FitResidual {
  double d = 0.0;
  std::optional<double> n;
  double observed = 0.0;
  double predicted = 0.0;
  double log_residual = 0.0;  // ln(observed) - ln(predicted)
};

struct ScratchFit {
  ScratchLaw law;
  double r_squared = 0.0;
  // Standard errors of the log-space regression coefficients, then
  // propagated to the law parameters (delta method). Zero when the fit has
  // no residual degrees of freedom.
  double se_alpha_d = 0.0;
  double se_log_d_c = 0.0;
  std::vector<FitResidual> residuals;
  FitRange range;
};

struct TransferFit {
  TransferLaw law;
  double r_squared = 0.0;
  double se_log_k = 0.0;
  double se_alpha = 0.0;
  double se_beta = 0.0;
  std::vector<FitResidual> residuals;
  FitRange range;
};

// Ordinary least squares of ln(wer_norm) on ln(d). Throws
// IdentifiabilityError with fewer than two distinct d values and DataError on
// non-positive inputs.
ScratchFit FitScratch(std::span<const ObservationPoint> points,
                      const std::string& data_unit = "utterances");

// Least squares of ln(wer_norm) on (ln d, ln n) with the base law frozen.
// Throws IdentifiabilityError when d or n takes a single value (alpha or beta
// unidentifiable) or the design is rank deficient.
TransferFit FitTransfer(std::span<const ObservationPoint> points,
                        const ScratchLaw& base);

}  // namespace nbscale

#endif  // NBSCALE_SCALING_H_
