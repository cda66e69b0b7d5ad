// core/include/nbscale/report.h

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

#ifndef NBSCALE_REPORT_H_
#define NBSCALE_REPORT_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nbscale/experiment.h"
#include "nbscale/scaling.h"

namespace nbscale {

// Observation table CSV with columns d,n,wer_norm; n may be left empty.
std::vector<ObservationPoint> ReadObservationsCsv(std::istream& in);
std::vector<ObservationPoint> ReadObservationsCsv(const std::string& path);
void WriteObservationsCsv(const std::vector<ObservationPoint>& points, std::ostream& out);

// Rows of a runs table with the given init mode, as observations.
std::vector<ObservationPoint> ObservationsFromRuns(const std::vector<RunRecord>& runs,
                                                   InitMode init);

struct FitReport {
  ScratchFit scratch;
  std::optional<TransferFit> transfer;
  double model_factor = 10.0;
  std::optional<double> data_factor;  // data multiplier matching model_factor
};

// Fits the scratch law on `scratch` (pooled over n), then the transfer law
// on `transfer` with the scratch law frozen. An empty `transfer` yields a
// scratch-only report.
FitReport FitLaws(const std::vector<ObservationPoint>& scratch,
                  const std::vector<ObservationPoint>& transfer,
                  const std::string& data_unit = "utterances",
                  double model_factor = 10.0);
FitReport FitRuns(const std::vector<RunRecord>& runs,
                  const std::string& data_unit = "utterances");

// The report as a JSON document; it doubles as the law file for prediction.
std::string FitReportToJson(const FitReport& report);
FitReport FitReportFromJson(const std::string& text);  // throws DataError
FitReport LoadFitReport(const std::string& path);
// One-line human summary of the size trade-off, e.g.
// "a 10x larger model is worth 5.31x more data".
std::string TradeoffLine(const FitReport& report);

// A report carrying the published constants, without fit statistics.
FitReport PublishedLawReport();

struct Prediction {
  double wer_norm = 0.0;
  std::optional<double> effective_data;  // transfer predictions only
  std::vector<std::string> warnings;
};

// Uses the transfer law when n is given, the scratch law otherwise. Throws
// DataError when n is given and the report has no transfer law.
Prediction Predict(const FitReport& report, double d, std::optional<double> n);
std::string PredictionToJson(const Prediction& p, double d, std::optional<double> n);

struct PlotRow {
  double d = 0.0;
  InitMode init = InitMode::kScratch;
  double measured = 0.0;   // mean wer_norm over replicates
  double predicted = 0.0;  // NaN when the corresponding law is not fitted
  bool operator==(const PlotRow&) const = default;
};

// Writes out_dir/plot_n<N>.csv for every model size in `runs`; returns the
// paths in ascending N.
std::vector<std::string> EmitPlotData(const std::vector<RunRecord>& runs,
                                      const FitReport& report,
                                      const std::string& out_dir);
std::vector<PlotRow> ReadPlotCsv(const std::string& path);

}  // namespace nbscale

#endif  // NBSCALE_REPORT_H_
