// tests/unit/report_test.cc

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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "nbscale/errors.h"

namespace nbscale {
namespace {

namespace fs = std::filesystem;

double Rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// A runs table generated exactly from the published laws.
std::vector<RunRecord> PublishedLawRuns() {
  const TransferLaw t = PublishedTransferLaw();
  std::vector<RunRecord> runs;
  for (int64_t n : {5000000, 17000000, 170000000, 700000000})
    for (int64_t d : {300, 1000, 3000, 10000, 30000, 95300}) {
      RunRecord r;
      r.d = d;
      r.n = n;
      r.init = InitMode::kScratch;
      r.wer_norm = PredictScratch(t.base, d);
      runs.push_back(r);
      r.init = InitMode::kPretrained;
      r.d = d / 100;
      r.wer_norm = PredictTransfer(t, r.d, n);
      runs.push_back(r);
    }
  return runs;
}

TEST(ObservationsCsvTest, ReadsOptionalModelSize) {
  std::stringstream ss("d,n,wer_norm\n10,,0.9\n100,5e6,0.8\n");
  const auto pts = ReadObservationsCsv(ss);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_FALSE(pts[0].n.has_value());
  EXPECT_EQ(*pts[1].n, 5e6);
  std::stringstream out;
  WriteObservationsCsv(pts, out);
  std::stringstream again(out.str());
  const auto back = ReadObservationsCsv(again);
  EXPECT_EQ(back[1].wer_norm, 0.8);
}

TEST(ObservationsCsvTest, Malformed) {
  std::stringstream no_header("x,y\n1,2\n");
  EXPECT_THROW(ReadObservationsCsv(no_header), DataError);
  std::stringstream bad("d,n,wer_norm\n10,,abc\n");
  EXPECT_THROW(ReadObservationsCsv(bad), DataError);
}

TEST(FitRunsTest, RecoversPublishedConstants) {
  const FitReport r = FitRuns(PublishedLawRuns());
  EXPECT_LT(Rel(r.scratch.law.d_c, 8.82), 1e-6);
  EXPECT_LT(Rel(r.scratch.law.alpha_d, 0.0146), 1e-6);
  ASSERT_TRUE(r.transfer.has_value());
  EXPECT_LT(Rel(r.transfer->law.k, 2.27e-11), 1e-6);
  EXPECT_LT(Rel(r.transfer->law.alpha, 1.71), 1e-6);
  EXPECT_LT(Rel(r.transfer->law.beta, 1.24), 1e-6);
  EXPECT_NE(TradeoffLine(r).find("5.31x"), std::string::npos) << TradeoffLine(r);
}

TEST(FitRunsTest, SinglePretrainedModelSizeIsUnidentifiable) {
  std::vector<RunRecord> runs;
  for (const auto& r : PublishedLawRuns())
    if (r.init == InitMode::kScratch || r.n == 5000000) runs.push_back(r);
  EXPECT_THROW(FitRuns(runs), IdentifiabilityError);
}

TEST(FitRunsTest, ScratchOnly) {
  std::vector<RunRecord> runs;
  for (const auto& r : PublishedLawRuns())
    if (r.init == InitMode::kScratch) runs.push_back(r);
  const FitReport rep = FitRuns(runs);
  EXPECT_FALSE(rep.transfer.has_value());
  EXPECT_THROW(FitRuns({}), DataError);
}

TEST(FitReportJsonTest, RoundTripIsExact) {
  const FitReport r = FitRuns(PublishedLawRuns());
  const std::string text = FitReportToJson(r);
  EXPECT_EQ(FitReportToJson(FitReportFromJson(text)), text);
  const FitReport back = FitReportFromJson(text);
  EXPECT_EQ(back.transfer->law.beta, r.transfer->law.beta);
  EXPECT_EQ(back.scratch.residuals.size(), r.scratch.residuals.size());
}

TEST(FitReportJsonTest, MalformedLawFile) {
  EXPECT_THROW(FitReportFromJson("{}"), DataError);
  EXPECT_THROW(FitReportFromJson("[1,2"), DataError);
  EXPECT_THROW(FitReportFromJson("{\"scratch\":{\"d_c\":-1,\"alpha_d\":1}}"), DataError);
}

TEST(PredictTest, PublishedConstants) {
  const FitReport published = PublishedLawReport();
  EXPECT_NEAR(Predict(published, 8.82, std::nullopt).wer_norm, 1.0, 1e-15);
  const Prediction p = Predict(published, 1000, 5e6);
  EXPECT_NEAR(p.wer_norm, 0.9397, 1e-4);
  EXPECT_NEAR(*p.effective_data, 620.6, 0.1);
  EXPECT_FALSE(Predict(published, 2.0, std::nullopt).warnings.empty());
}

TEST(PredictTest, WarnsOutsideFittedRange) {
  const FitReport r = FitRuns(PublishedLawRuns());
  EXPECT_TRUE(Predict(r, 1000, std::nullopt).warnings.empty());
  EXPECT_FALSE(Predict(r, 1e7, std::nullopt).warnings.empty());
  FitReport scratch_only = r;
  scratch_only.transfer.reset();
  EXPECT_THROW(Predict(scratch_only, 10, 5e6), DataError);
}

TEST(PlotDataTest, RoundTripIsExact) {
  std::vector<RunRecord> runs;
  for (auto r : PublishedLawRuns()) {
    r.seed = 1;
    runs.push_back(r);
    r.seed = 2;
    r.wer_norm *= 1.01;
    runs.push_back(r);
  }
  const FitReport rep = FitRuns(runs);
  const fs::path dir = fs::temp_directory_path() / "nbscale_plot_test";
  fs::remove_all(dir);
  const auto paths = EmitPlotData(runs, rep, dir.string());
  ASSERT_EQ(paths.size(), 4u);
  const auto rows = ReadPlotCsv(paths[0]);
  ASSERT_EQ(rows.size(), 12u);
  for (const auto& row : rows) {
    const double expect = row.init == InitMode::kScratch
                              ? PredictScratch(rep.scratch.law, row.d)
                              : PredictTransfer(rep.transfer->law, row.d, 5e6);
    EXPECT_EQ(row.predicted, expect);
  }
  const double truth = PredictScratch(PublishedScratchLaw(), 300);
  EXPECT_EQ(rows[0].d, 3.0);
  EXPECT_EQ(rows[1].d, 10.0);
  bool found = false;
  for (const auto& row : rows)
    if (row.d == 300 && row.init == InitMode::kScratch) {
      EXPECT_EQ(row.measured, (truth + truth * 1.01) / 2);
      found = true;
    }
  EXPECT_TRUE(found);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace nbscale
