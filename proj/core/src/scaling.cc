// core/src/scaling.cc

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

#include <cmath>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "nbscale/errors.h"

namespace nbscale {

namespace {

bool FinitePositive(double v) { return std::isfinite(v) && v > 0.0; }

void RequirePositive(double v, const char* what) {
  if (!FinitePositive(v))
    throw std::invalid_argument(std::string(what) + " must be finite and > 0");
}

}  // namespace

void ScratchLaw::Validate() const {
  if (!FinitePositive(d_c) || !FinitePositive(alpha_d))
    throw std::invalid_argument("scratch law: d_c and alpha_d must be finite and > 0");
}

void TransferLaw::Validate() const {
  base.Validate();
  if (!FinitePositive(k) || !FinitePositive(alpha) || !FinitePositive(beta))
    throw std::invalid_argument("transfer law: k, alpha, beta must be finite and > 0");
}

ScratchLaw PublishedScratchLaw() { return ScratchLaw{8.82, 0.0146, "published data units"}; }

TransferLaw PublishedTransferLaw() {
  return TransferLaw{2.27e-11, 1.71, 1.24, PublishedScratchLaw()};
}

double PredictScratch(const ScratchLaw& law, double d) {
  law.Validate();
  RequirePositive(d, "d");
  return std::pow(law.d_c / d, law.alpha_d);
}

double EffectiveData(const TransferLaw& law, double d, double n) {
  law.Validate();
  RequirePositive(d, "d");
  RequirePositive(n, "n");
  return law.k * std::pow(d, law.alpha) * std::pow(n, law.beta);
}

double PredictTransfer(const TransferLaw& law, double d, double n) {
  return std::pow(law.base.d_c / EffectiveData(law, d, n), law.base.alpha_d);
}

double DataEquivalentFactor(const TransferLaw& law, double model_factor) {
  law.Validate();
  RequirePositive(model_factor, "model factor");
  return std::pow(model_factor, law.beta / law.alpha);
}

std::vector<std::string> RegimeWarnings(double prediction, double d,
                                        std::optional<double> n,
                                        const std::optional<FitRange>& range) {
  std::vector<std::string> warnings;
  if (prediction > 1.0)
    warnings.push_back(
        "predicted WER_norm exceeds 1: rescoring cannot do worse than the first "
        "pass in practice, so the power law has broken down at this small data size");
  if (range) {
    if (d < range->d_min || d > range->d_max)
      warnings.push_back("d lies outside the fitted data range; power laws break "
                         "down at both extremes of the data-size spectrum");
    if (n && range->n_min && range->n_max && (*n < *range->n_min || *n > *range->n_max))
      warnings.push_back("n lies outside the fitted model-size range");
  }
  return warnings;
}

ScratchFit FitScratch(std::span<const ObservationPoint> points,
                      const std::string& data_unit) {
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!FinitePositive(p.d)) throw DataError("FitScratch: d must be > 0");
    if (!FinitePositive(p.wer_norm)) throw DataError("FitScratch: wer_norm must be > 0");
    distinct.insert(p.d);
  }
  if (distinct.size() < 2)
    throw IdentifiabilityError("alpha_d unidentifiable: need at least two distinct d values");

  const double m = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += std::log(p.d);
    my += std::log(p.wer_norm);
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.d) - mx, dy = std::log(p.wer_norm) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;

  ScratchFit fit;
  fit.law.alpha_d = -slope;
  fit.law.data_unit = data_unit;
  if (!(fit.law.alpha_d > 0.0))
    throw DataError("FitScratch: WER_norm does not decrease with d (fitted alpha_d <= 0)");
  const double log_d_c = intercept / fit.law.alpha_d;
  fit.law.d_c = std::exp(log_d_c);

  double ssr = 0.0;
  fit.range.d_min = fit.range.d_max = points[0].d;
  for (const auto& p : points) {
    const double pred = intercept + slope * std::log(p.d);
    const double r = std::log(p.wer_norm) - pred;
    ssr += r * r;
    fit.residuals.push_back({p.d, p.n, p.wer_norm, std::exp(pred), r});
    fit.range.d_min = std::min(fit.range.d_min, p.d);
    fit.range.d_max = std::max(fit.range.d_max, p.d);
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  if (points.size() > 2) {
    const double sigma2 = ssr / (m - 2.0);
    const double var_b = sigma2 / sxx;
    const double var_a = sigma2 * (1.0 / m + mx * mx / sxx);
    const double cov_ab = -mx * sigma2 / sxx;
    fit.se_alpha_d = std::sqrt(var_b);
    // log d_c = -a / b
    const double ga = -1.0 / slope, gb = intercept / (slope * slope);
    fit.se_log_d_c =
        std::sqrt(std::max(0.0, ga * ga * var_a + gb * gb * var_b + 2 * ga * gb * cov_ab));
  }
  return fit;
}

TransferFit FitTransfer(std::span<const ObservationPoint> points,
                        const ScratchLaw& base) {
  base.Validate();
  std::set<double> ds, ns;
  for (const auto& p : points) {
    if (!FinitePositive(p.d)) throw DataError("FitTransfer: d must be > 0");
    if (!p.n || !FinitePositive(*p.n))
      throw DataError("FitTransfer: every point needs a model size n > 0");
    if (!FinitePositive(p.wer_norm)) throw DataError("FitTransfer: wer_norm must be > 0");
    ds.insert(p.d);
    ns.insert(*p.n);
  }
  if (ds.size() < 2)
    throw IdentifiabilityError("alpha unidentifiable: all observations share one d");
  if (ns.size() < 2)
    throw IdentifiabilityError("beta unidentifiable: all observations share one n");
  if (points.size() < 3)
    throw IdentifiabilityError("transfer fit needs at least three observations");

  const Eigen::Index m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd x(m, 3);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::log(points[i].d);
    x(i, 2) = std::log(*points[i].n);
    y(i) = std::log(points[i].wer_norm);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < 3)
    throw IdentifiabilityError("transfer fit: ln d and ln n are collinear");
  const Eigen::Vector3d c = qr.solve(y);

  TransferFit fit;
  const double ad = base.alpha_d;
  fit.law.base = base;
  fit.law.alpha = -c(1) / ad;
  fit.law.beta = -c(2) / ad;
  const double log_k = std::log(base.d_c) - c(0) / ad;
  fit.law.k = std::exp(log_k);
  if (!(fit.law.alpha > 0.0) || !(fit.law.beta > 0.0))
    throw DataError("FitTransfer: fitted alpha or beta is not positive; WER_norm "
                    "does not decrease with data and model size");

  const Eigen::VectorXd resid = y - x * c;
  const double ssr = resid.squaredNorm();
  const double mean_y = y.mean();
  const double sst = (y.array() - mean_y).square().sum();
  fit.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
  if (m > 3) {
    const double sigma2 = ssr / static_cast<double>(m - 3);
    const Eigen::Matrix3d cov = sigma2 * (x.transpose() * x).inverse();
    fit.se_log_k = std::sqrt(std::max(0.0, cov(0, 0))) / ad;
    fit.se_alpha = std::sqrt(std::max(0.0, cov(1, 1))) / ad;
    fit.se_beta = std::sqrt(std::max(0.0, cov(2, 2))) / ad;
  }
  fit.range.d_min = *ds.begin();
  fit.range.d_max = *ds.rbegin();
  fit.range.n_min = *ns.begin();
  fit.range.n_max = *ns.rbegin();
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = points[i];
    fit.residuals.push_back({p.d, p.n, p.wer_norm, std::exp(y(i) - resid(i)), resid(i)});
  }
  return fit;
}

}  // namespace nbscale
