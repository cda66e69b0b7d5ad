// tests/unit/scaling_test.cc

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

#include "nbscale/scaling.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "nbscale/errors.h"
#include "nbscale/rng.h"

namespace nbscale {
namespace {

double Rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<ObservationPoint> ScratchPoints(const ScratchLaw& law) {
  std::vector<ObservationPoint> pts;
  for (double d : {300.0, 1e3, 3e3, 1e4, 3e4, 95.3e3})
    pts.push_back({d, std::nullopt, std::pow(law.d_c / d, law.alpha_d)});
  return pts;
}

std::vector<ObservationPoint> TransferPoints(const TransferLaw& law) {
  std::vector<ObservationPoint> pts;
  for (double d : {10.0, 30.0, 100.0, 300.0})
    for (double n : {5e6, 17e6, 170e6, 700e6}) {
      const double dt = law.k * std::pow(d, law.alpha) * std::pow(n, law.beta);
      pts.push_back({d, n, std::pow(law.base.d_c / dt, law.base.alpha_d)});
    }
  return pts;
}

TEST(PredictScratchTest, Values) {
  const ScratchLaw law = PublishedScratchLaw();
  EXPECT_NEAR(PredictScratch(law, law.d_c), 1.0, 1e-15);
  // (8.82 / 30000)^0.0146 = exp(0.0146 * ln(8.82 / 30000))
  EXPECT_NEAR(PredictScratch(law, 30000), std::exp(0.0146 * std::log(8.82 / 30000)), 1e-15);
  EXPECT_THROW(PredictScratch(law, 0.0), std::invalid_argument);
  double prev = 2.0;
  for (double d = 1; d < 1e6; d *= 3) {
    const double v = PredictScratch(law, d);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(PredictTransferTest, Values) {
  const TransferLaw law = PublishedTransferLaw();
  const double dt = 2.27e-11 * std::pow(1000.0, 1.71) * std::pow(5e6, 1.24);
  EXPECT_NEAR(EffectiveData(law, 1000, 5e6), dt, 1e-9 * dt);
  EXPECT_NEAR(EffectiveData(law, 1000, 5e6), 620.6, 0.1);
  EXPECT_NEAR(PredictTransfer(law, 1000, 5e6), 0.9397, 1e-4);
  EXPECT_THROW(PredictTransfer(law, 1000, -1), std::invalid_argument);
}

TEST(PredictTransferTest, ModelDataExchange) {
  const TransferLaw law = PublishedTransferLaw();
  const double f = 7.0;
  EXPECT_NEAR(PredictTransfer(law, 1000 / std::pow(f, law.beta / law.alpha), 5e6 * f),
              PredictTransfer(law, 1000, 5e6), 1e-12);
  EXPECT_LT(PredictTransfer(law, 2000, 5e6), PredictTransfer(law, 1000, 5e6));
  EXPECT_LT(PredictTransfer(law, 1000, 6e6), PredictTransfer(law, 1000, 5e6));
}

TEST(EffectiveDataTest, ModelScaling) {
  const TransferLaw law = PublishedTransferLaw();
  EXPECT_NEAR(EffectiveData(law, 50, 5e7) / EffectiveData(law, 50, 5e6), std::pow(10, 1.24),
              1e-9);
  EXPECT_NEAR(std::pow(10, 1.24), 17.38, 0.01);
  TransferLaw tiny = law;
  tiny.k = 1e-300;
  EXPECT_LT(EffectiveData(tiny, 50, 5e6), 1e-280);
}

TEST(DataEquivalentFactorTest, Values) {
  const TransferLaw law = PublishedTransferLaw();
  EXPECT_NEAR(DataEquivalentFactor(law, 10), 5.31, 0.01);
  EXPECT_DOUBLE_EQ(DataEquivalentFactor(law, 1), 1.0);
  EXPECT_NEAR(DataEquivalentFactor(law, 2) * DataEquivalentFactor(law, 3),
              DataEquivalentFactor(law, 6), 1e-12);
  TransferLaw perturbed = law;
  perturbed.k *= 3;
  perturbed.base.d_c *= 2;
  perturbed.base.alpha_d *= 5;
  EXPECT_EQ(DataEquivalentFactor(perturbed, 10), DataEquivalentFactor(law, 10));
  EXPECT_THROW(DataEquivalentFactor(law, 0), std::invalid_argument);
}

TEST(FitScratchTest, RecoversNoiselessLaw) {
  const ScratchLaw truth = PublishedScratchLaw();
  const auto pts = ScratchPoints(truth);
  const ScratchFit fit = FitScratch(pts);
  EXPECT_LT(Rel(fit.law.d_c, truth.d_c), 1e-9);
  EXPECT_LT(Rel(fit.law.alpha_d, truth.alpha_d), 1e-9);
  for (const auto& p : pts) EXPECT_LT(Rel(PredictScratch(fit.law, p.d), p.wer_norm), 1e-9);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
  EXPECT_EQ(fit.residuals.size(), pts.size());
  EXPECT_EQ(fit.range.d_min, 300.0);
  EXPECT_EQ(fit.range.d_max, 95.3e3);
}

TEST(FitScratchTest, TwoPointsInterpolateExactly) {
  const std::vector<ObservationPoint> pts{{10, {}, 0.9}, {1000, {}, 0.6}};
  const ScratchFit fit = FitScratch(pts);
  for (const auto& r : fit.residuals) EXPECT_NEAR(r.log_residual, 0.0, 1e-12);
  EXPECT_EQ(fit.se_alpha_d, 0.0);
}

TEST(FitScratchTest, NoisyMedianWithinFivePercent) {
  const ScratchLaw truth = PublishedScratchLaw();
  Rng rng(13);
  std::vector<double> alphas;
  for (int trial = 0; trial < 1000; ++trial) {
    auto pts = ScratchPoints(truth);
    for (auto& p : pts) p.wer_norm *= std::exp(0.01 * rng.Normal());
    try {
      alphas.push_back(FitScratch(pts).law.alpha_d);
    } catch (const DataError&) {
      alphas.push_back(0.0);  // noise flipped the slope; counts as a miss
    }
  }
  std::nth_element(alphas.begin(), alphas.begin() + 500, alphas.end());
  EXPECT_LT(Rel(alphas[500], truth.alpha_d), 0.05);
}

TEST(FitScratchTest, Errors) {
  const std::vector<ObservationPoint> one{{10, {}, 0.9}, {10, {}, 0.8}};
  EXPECT_THROW(FitScratch(one), IdentifiabilityError);
  const std::vector<ObservationPoint> bad{{10, {}, 0.9}, {100, {}, 0.0}};
  EXPECT_THROW(FitScratch(bad), DataError);
}

TEST(FitTransferTest, RecoversNoiselessLaw) {
  const TransferLaw truth = PublishedTransferLaw();
  const TransferFit fit = FitTransfer(TransferPoints(truth), truth.base);
  EXPECT_LT(Rel(fit.law.k, truth.k), 1e-6);
  EXPECT_LT(Rel(fit.law.alpha, truth.alpha), 1e-6);
  EXPECT_LT(Rel(fit.law.beta, truth.beta), 1e-6);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
  EXPECT_EQ(*fit.range.n_min, 5e6);
  EXPECT_EQ(*fit.range.n_max, 700e6);
}

TEST(FitTransferTest, RandomGroundTruthsAreIdentifiable) {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    TransferLaw truth;
    truth.base = {1 + 50 * rng.Uniform(), 0.005 + 0.5 * rng.Uniform(), "u"};
    truth.k = std::exp(-30 + 25 * rng.Uniform());
    truth.alpha = 0.2 + 2 * rng.Uniform();
    truth.beta = 0.2 + 2 * rng.Uniform();
    const TransferFit fit = FitTransfer(TransferPoints(truth), truth.base);
    EXPECT_LT(Rel(fit.law.k, truth.k), 1e-6);
    EXPECT_LT(Rel(fit.law.alpha, truth.alpha), 1e-8);
    EXPECT_LT(Rel(fit.law.beta, truth.beta), 1e-8);
  }
}

TEST(FitTransferTest, ConstantFactorOnlyMovesK) {
  const TransferLaw truth = PublishedTransferLaw();
  auto pts = TransferPoints(truth);
  const double c = 1.05;
  for (auto& p : pts) p.wer_norm *= c;
  const TransferFit fit = FitTransfer(pts, truth.base);
  EXPECT_LT(Rel(fit.law.alpha, truth.alpha), 1e-9);
  EXPECT_LT(Rel(fit.law.beta, truth.beta), 1e-9);
  EXPECT_LT(Rel(fit.law.k, truth.k * std::pow(c, -1.0 / truth.base.alpha_d)), 1e-6);
}

TEST(FitTransferTest, SingleModelSizeIsUnidentifiable) {
  const TransferLaw truth = PublishedTransferLaw();
  std::vector<ObservationPoint> pts;
  for (const auto& p : TransferPoints(truth))
    if (*p.n == 5e6) pts.push_back(p);
  try {
    FitTransfer(pts, truth.base);
    FAIL() << "expected IdentifiabilityError";
  } catch (const IdentifiabilityError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos) << e.what();
  }
  std::vector<ObservationPoint> same_d;
  for (const auto& p : TransferPoints(truth))
    if (p.d == 10.0) same_d.push_back(p);
  EXPECT_THROW(FitTransfer(same_d, truth.base), IdentifiabilityError);
}

TEST(FitTransferTest, FixedModelSliceIsAPowerLaw) {
  const TransferLaw law = PublishedTransferLaw();
  std::vector<ObservationPoint> slice;
  for (double d : {10.0, 100.0, 1000.0})
    slice.push_back({d, std::nullopt, PredictTransfer(law, d, 17e6)});
  const ScratchFit fit = FitScratch(slice);
  EXPECT_LT(Rel(fit.law.alpha_d, law.base.alpha_d * law.alpha), 1e-9);
}

TEST(PredictionsTest, PositiveAndFinite) {
  Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    const double d = std::exp(20 * rng.Uniform() - 5), n = std::exp(25 * rng.Uniform());
    const double s = PredictScratch(PublishedScratchLaw(), d);
    const double t = PredictTransfer(PublishedTransferLaw(), d, n);
    EXPECT_TRUE(std::isfinite(s) && s > 0);
    EXPECT_TRUE(std::isfinite(t) && t > 0);
  }
}

TEST(RegimeWarningsTest, FlagsBreakdowns) {
  EXPECT_FALSE(RegimeWarnings(1.2, 5, std::nullopt, std::nullopt).empty());
  EXPECT_TRUE(RegimeWarnings(0.9, 5, std::nullopt, std::nullopt).empty());
  const FitRange range{10, 1000, 1e3, 1e5};
  EXPECT_EQ(RegimeWarnings(0.9, 5000, 1e4, range).size(), 1u);
  EXPECT_EQ(RegimeWarnings(0.9, 50, 1e7, range).size(), 1u);
  EXPECT_TRUE(RegimeWarnings(0.9, 50, 1e4, range).empty());
}

}  // namespace
}  // namespace nbscale
