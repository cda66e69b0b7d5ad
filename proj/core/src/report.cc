// core/src/report.cc

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

#include "nbscale/report.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"
#include "nbscale/errors.h"

namespace nbscale {

using nlohmann::json;

namespace {

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseDouble(const std::string& s, const std::string& where) {
  size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw DataError(where + ": bad number '" + s + "'");
  }
  if (pos != s.size()) throw DataError(where + ": bad number '" + s + "'");
  return v;
}

std::vector<std::string> SplitCsv(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> f;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    f.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return f;
}

json OptionalJson(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> OptionalFrom(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json RangeJson(const FitRange& r) {
  return {{"d_min", r.d_min}, {"d_max", r.d_max},
          {"n_min", OptionalJson(r.n_min)}, {"n_max", OptionalJson(r.n_max)}};
}

FitRange RangeFrom(const json& j) {
  FitRange r;
  r.d_min = j.at("d_min").get<double>();
  r.d_max = j.at("d_max").get<double>();
  r.n_min = OptionalFrom(j.value("n_min", json(nullptr)));
  r.n_max = OptionalFrom(j.value("n_max", json(nullptr)));
  return r;
}

json ResidualsJson(const std::vector<FitResidual>& rs) {
  json a = json::array();
  for (const auto& r : rs)
    a.push_back({{"d", r.d}, {"n", OptionalJson(r.n)}, {"observed", r.observed},
                 {"predicted", r.predicted}, {"log_residual", r.log_residual}});
  return a;
}

std::vector<FitResidual> ResidualsFrom(const json& a) {
  std::vector<FitResidual> rs;
  for (const auto& j : a) {
    FitResidual r;
    r.d = j.at("d").get<double>();
    r.n = OptionalFrom(j.value("n", json(nullptr)));
    r.observed = j.at("observed").get<double>();
    r.predicted = j.at("predicted").get<double>();
    r.log_residual = j.at("log_residual").get<double>();
    rs.push_back(r);
  }
  return rs;
}

}  // namespace

std::vector<ObservationPoint> ReadObservationsCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("observation table: empty input");
  const auto header = SplitCsv(line);
  int col_d = -1, col_n = -1, col_w = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "d") col_d = static_cast<int>(i);
    if (header[i] == "n") col_n = static_cast<int>(i);
    if (header[i] == "wer_norm") col_w = static_cast<int>(i);
  }
  if (col_d < 0 || col_w < 0)
    throw DataError("observation table: header needs columns d and wer_norm");
  std::vector<ObservationPoint> points;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = SplitCsv(line);
    const std::string where = "observation table line " + std::to_string(line_no);
    if (f.size() != header.size()) throw DataError(where + ": wrong column count");
    ObservationPoint p;
    p.d = ParseDouble(f[col_d], where);
    if (col_n >= 0 && !f[col_n].empty()) p.n = ParseDouble(f[col_n], where);
    p.wer_norm = ParseDouble(f[col_w], where);
    points.push_back(p);
  }
  return points;
}

std::vector<ObservationPoint> ReadObservationsCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open observation table '" + path + "'");
  return ReadObservationsCsv(in);
}

void WriteObservationsCsv(const std::vector<ObservationPoint>& points, std::ostream& out) {
  out << "d,n,wer_norm\n";
  for (const auto& p : points)
    out << FormatDouble(p.d) << ',' << (p.n ? FormatDouble(*p.n) : "") << ','
        << FormatDouble(p.wer_norm) << '\n';
}

std::vector<ObservationPoint> ObservationsFromRuns(const std::vector<RunRecord>& runs,
                                                   InitMode init) {
  std::vector<ObservationPoint> points;
  for (const auto& r : runs)
    if (r.init == init)
      points.push_back({static_cast<double>(r.d), static_cast<double>(r.n), r.wer_norm});
  return points;
}

FitReport FitLaws(const std::vector<ObservationPoint>& scratch,
                  const std::vector<ObservationPoint>& transfer,
                  const std::string& data_unit, double model_factor) {
  if (scratch.empty()) throw DataError("no scratch observations to fit");
  FitReport report;
  report.model_factor = model_factor;
  report.scratch = FitScratch(scratch, data_unit);
  if (!transfer.empty()) {
    report.transfer = FitTransfer(transfer, report.scratch.law);
    report.data_factor = DataEquivalentFactor(report.transfer->law, model_factor);
  }
  return report;
}

FitReport FitRuns(const std::vector<RunRecord>& runs, const std::string& data_unit) {
  return FitLaws(ObservationsFromRuns(runs, InitMode::kScratch),
                 ObservationsFromRuns(runs, InitMode::kPretrained), data_unit);
}

std::string FitReportToJson(const FitReport& report) {
  const auto& s = report.scratch;
  json j;
  j["scratch"] = {{"d_c", s.law.d_c},
                  {"alpha_d", s.law.alpha_d},
                  {"data_unit", s.law.data_unit},
                  {"se_alpha_d", s.se_alpha_d},
                  {"se_log_d_c", s.se_log_d_c},
                  {"r_squared", s.r_squared},
                  {"range", RangeJson(s.range)},
                  {"residuals", ResidualsJson(s.residuals)}};
  if (report.transfer) {
    const auto& t = *report.transfer;
    j["transfer"] = {{"k", t.law.k},
                     {"alpha", t.law.alpha},
                     {"beta", t.law.beta},
                     {"se_log_k", t.se_log_k},
                     {"se_alpha", t.se_alpha},
                     {"se_beta", t.se_beta},
                     {"r_squared", t.r_squared},
                     {"range", RangeJson(t.range)},
                     {"residuals", ResidualsJson(t.residuals)}};
  } else {
    j["transfer"] = nullptr;
  }
  j["tradeoff"] = {{"model_factor", report.model_factor},
                   {"data_factor", OptionalJson(report.data_factor)}};
  return j.dump(2);
}

FitReport FitReportFromJson(const std::string& text) {
  try {
    const json j = json::parse(text);
    FitReport r;
    const json& s = j.at("scratch");
    r.scratch.law.d_c = s.at("d_c").get<double>();
    r.scratch.law.alpha_d = s.at("alpha_d").get<double>();
    r.scratch.law.data_unit = s.value("data_unit", std::string("utterances"));
    r.scratch.se_alpha_d = s.value("se_alpha_d", 0.0);
    r.scratch.se_log_d_c = s.value("se_log_d_c", 0.0);
    r.scratch.r_squared = s.value("r_squared", 0.0);
    if (s.contains("range")) r.scratch.range = RangeFrom(s.at("range"));
    if (s.contains("residuals")) r.scratch.residuals = ResidualsFrom(s.at("residuals"));
    r.scratch.law.Validate();
    if (j.contains("transfer") && !j.at("transfer").is_null()) {
      const json& t = j.at("transfer");
      TransferFit tf;
      tf.law.k = t.at("k").get<double>();
      tf.law.alpha = t.at("alpha").get<double>();
      tf.law.beta = t.at("beta").get<double>();
      tf.law.base = r.scratch.law;
      tf.se_log_k = t.value("se_log_k", 0.0);
      tf.se_alpha = t.value("se_alpha", 0.0);
      tf.se_beta = t.value("se_beta", 0.0);
      tf.r_squared = t.value("r_squared", 0.0);
      if (t.contains("range")) tf.range = RangeFrom(t.at("range"));
      if (t.contains("residuals")) tf.residuals = ResidualsFrom(t.at("residuals"));
      tf.law.Validate();
      r.transfer = tf;
    }
    if (j.contains("tradeoff")) {
      r.model_factor = j.at("tradeoff").value("model_factor", 10.0);
      r.data_factor = OptionalFrom(j.at("tradeoff").value("data_factor", json(nullptr)));
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed law file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed law file: ") + e.what());
  }
}

FitReport LoadFitReport(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open law file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return FitReportFromJson(ss.str());
}

std::string TradeoffLine(const FitReport& report) {
  char buf[160];
  if (!report.transfer) return "no transfer law fitted; model/data trade-off unavailable";
  const double factor = DataEquivalentFactor(report.transfer->law, report.model_factor);
  std::snprintf(buf, sizeof(buf), "a %gx larger model is worth %.2fx more data",
                report.model_factor, factor);
  return buf;
}

FitReport PublishedLawReport() {
  FitReport r;
  r.scratch.law = PublishedScratchLaw();
  TransferFit t;
  t.law = PublishedTransferLaw();
  r.transfer = t;
  r.data_factor = DataEquivalentFactor(t.law, r.model_factor);
  return r;
}

namespace {

// Ranges are known only for fitted laws; a zero range means "unknown".
std::optional<FitRange> KnownRange(const FitRange& r) {
  if (r.d_max <= 0.0) return std::nullopt;
  return r;
}

}  // namespace

Prediction Predict(const FitReport& report, double d, std::optional<double> n) {
  if (!(std::isfinite(d) && d > 0.0)) throw std::invalid_argument("d must be > 0");
  Prediction p;
  if (n) {
    if (!report.transfer) throw DataError("law file has no transfer law; cannot use n");
    p.wer_norm = PredictTransfer(report.transfer->law, d, *n);
    p.effective_data = EffectiveData(report.transfer->law, d, *n);
    p.warnings = RegimeWarnings(p.wer_norm, d, n, KnownRange(report.transfer->range));
  } else {
    p.wer_norm = PredictScratch(report.scratch.law, d);
    p.warnings = RegimeWarnings(p.wer_norm, d, std::nullopt, KnownRange(report.scratch.range));
  }
  return p;
}

std::string PredictionToJson(const Prediction& p, double d, std::optional<double> n) {
  json j = {{"d", d},
            {"n", OptionalJson(n)},
            {"law", n ? "transfer" : "scratch"},
            {"wer_norm", p.wer_norm},
            {"effective_data", OptionalJson(p.effective_data)},
            {"warnings", p.warnings}};
  return j.dump(2);
}

std::vector<std::string> EmitPlotData(const std::vector<RunRecord>& runs,
                                      const FitReport& report,
                                      const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  struct Acc {
    double sum = 0.0;
    int count = 0;
  };
  // n -> (d, init) -> mean; std::map keeps the output order deterministic.
  std::map<int64_t, std::map<std::pair<int64_t, int>, Acc>> groups;
  for (const auto& r : runs) {
    auto& a = groups[r.n][{r.d, static_cast<int>(r.init)}];
    a.sum += r.wer_norm;
    ++a.count;
  }
  std::vector<std::string> paths;
  for (const auto& [n, cells] : groups) {
    const fs::path path = fs::path(out_dir) / ("plot_n" + std::to_string(n) + ".csv");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write plot data '" + path.string() + "'");
    out << "d,init,measured_wer_norm,predicted_wer_norm\n";
    for (const auto& [key, acc] : cells) {
      const auto init = static_cast<InitMode>(key.second);
      const double d = static_cast<double>(key.first);
      double predicted = std::numeric_limits<double>::quiet_NaN();
      if (init == InitMode::kScratch)
        predicted = PredictScratch(report.scratch.law, d);
      else if (report.transfer)
        predicted = PredictTransfer(report.transfer->law, d, static_cast<double>(n));
      out << key.first << ',' << InitModeName(init) << ',' << FormatDouble(acc.sum / acc.count)
          << ',' << FormatDouble(predicted) << '\n';
    }
    paths.push_back(path.string());
  }
  return paths;
}

std::vector<PlotRow> ReadPlotCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open plot data '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (SplitCsv(line) !=
      std::vector<std::string>{"d", "init", "measured_wer_norm", "predicted_wer_norm"})
    throw DataError("plot data '" + path + "': unexpected header");
  std::vector<PlotRow> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = SplitCsv(line);
    const std::string where = path + " line " + std::to_string(line_no);
    if (f.size() != 4) throw DataError(where + ": expected 4 columns");
    PlotRow r;
    r.d = ParseDouble(f[0], where);
    try {
      r.init = ParseInitMode(f[1]);
    } catch (const std::invalid_argument& e) {
      throw DataError(where + ": " + e.what());
    }
    r.measured = ParseDouble(f[2], where);
    r.predicted = ParseDouble(f[3], where);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace nbscale
