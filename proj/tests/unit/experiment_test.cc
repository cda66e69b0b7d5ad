// tests/unit/experiment_test.cc

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

#include "nbscale/experiment.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nbscale/errors.h"
#include "nbscale/metrics.h"

namespace nbscale {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nbscale_" + name);
  fs::remove_all(dir);
  return dir;
}

SweepConfig TinySweep() {
  SweepConfig c;
  c.synth.vocab_size = 10;
  c.synth.dev_size = 20;
  c.synth.test_size = 20;
  c.synth.nbest_depth = 4;
  c.synth.max_len = 8;
  c.d_values = {5, 10};
  ScorerConfig a;
  a.vocab_size = 10;
  a.hidden = 4;
  a.layers = 1;
  a.heads = 2;
  a.ffn_dim = 4;
  a.max_len = 12;
  ScorerConfig b = a;
  b.hidden = 6;
  c.models = {a, b};
  c.replicates = {1};
  c.train.max_epochs = 2;
  c.train.batch_size = 4;
  c.train.learning_rate = 1e-2;
  c.pretrain.corpus_sentences = 50;
  c.pretrain.train.max_epochs = 1;
  c.record_wall_time = false;
  return c;
}

TEST(InitModeTest, Names) {
  EXPECT_EQ(ParseInitMode(InitModeName(InitMode::kScratch)), InitMode::kScratch);
  EXPECT_EQ(ParseInitMode("pretrained"), InitMode::kPretrained);
  EXPECT_THROW(ParseInitMode("warm"), std::invalid_argument);
}

TEST(DefaultWeightGridTest, Values) {
  const auto g = DefaultWeightGrid();
  ASSERT_EQ(g.size(), 21u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_DOUBLE_EQ(g.back(), 2.0);
}

TEST(CellSeedTest, DependsOnEveryCoordinate) {
  const uint64_t base = CellSeed(1, 10, 100, InitMode::kScratch, 1);
  EXPECT_EQ(base, CellSeed(1, 10, 100, InitMode::kScratch, 1));
  EXPECT_NE(base, CellSeed(2, 10, 100, InitMode::kScratch, 1));
  EXPECT_NE(base, CellSeed(1, 11, 100, InitMode::kScratch, 1));
  EXPECT_NE(base, CellSeed(1, 10, 101, InitMode::kScratch, 1));
  EXPECT_NE(base, CellSeed(1, 10, 100, InitMode::kPretrained, 1));
  EXPECT_NE(base, CellSeed(1, 10, 100, InitMode::kScratch, 2));
}

TEST(RunExperimentTest, RecordIsConsistent) {
  const SweepConfig s = TinySweep();
  SynthConfig synth = s.synth;
  synth.train_size = 10;
  const SynthCorpora data = SynthCorpus(synth);
  RunOptions opt;
  opt.scorer = s.models[0];
  opt.train = s.train;
  opt.w_grid = DefaultWeightGrid();
  RunDetails details;
  const RunRecord r = RunExperiment(data.train, data.dev, data.test, opt, nullptr, &details);
  EXPECT_EQ(r.d, 10);
  EXPECT_EQ(r.n, s.models[0].NonEmbeddingParams());
  EXPECT_LE(r.wer_oracle, std::min(r.wer_1p, r.wer_2p));
  EXPECT_NEAR(r.wer_norm, NormalizedWer(r.wer_2p, r.wer_1p, r.wer_oracle), 1e-12);
  EXPECT_DOUBLE_EQ(r.wer_1p, FirstPassWer(data.test).rate());
  EXPECT_DOUBLE_EQ(r.wer_oracle, OracleWer(data.test).rate());
  ASSERT_TRUE(details.finetune.has_value());
  EXPECT_EQ(r.epochs, details.finetune->epochs_trained);
}

TEST(RunExperimentTest, PretrainedNeedsAModel) {
  const SweepConfig s = TinySweep();
  SynthConfig synth = s.synth;
  synth.train_size = 5;
  const SynthCorpora data = SynthCorpus(synth);
  RunOptions opt;
  opt.scorer = s.models[0];
  opt.init = InitMode::kPretrained;
  opt.w_grid = {0.0};
  EXPECT_THROW(RunExperiment(data.train, data.dev, data.test, opt), std::invalid_argument);
}

TEST(RunExperimentTest, ZeroWeightGridGivesExactlyOne) {
  const SweepConfig s = TinySweep();
  SynthConfig synth = s.synth;
  synth.train_size = 5;
  const SynthCorpora data = SynthCorpus(synth);
  RunOptions opt;
  opt.scorer = s.models[0];
  opt.train = s.train;
  opt.w_grid = {0.0};
  EXPECT_EQ(RunExperiment(data.train, data.dev, data.test, opt).wer_norm, 1.0);
}

TEST(SweepTest, CardinalityResumeAndDeterminism) {
  const SweepConfig c = TinySweep();
  const fs::path dir = FreshDir("sweep_a");
  SweepProgress p1;
  const auto t1 = Sweep(c, dir.string(), &p1);
  EXPECT_EQ(t1.size(), 8u);
  EXPECT_EQ(p1.completed, 8u);
  EXPECT_EQ(p1.failed, 0u);
  const std::string csv1 = Slurp(dir / "runs.csv");

  SweepProgress p2;
  const auto t2 = Sweep(c, dir.string(), &p2);
  EXPECT_EQ(p2.skipped, 8u);
  EXPECT_EQ(p2.completed, 0u);
  EXPECT_EQ(t2, t1);
  EXPECT_EQ(Slurp(dir / "runs.csv"), csv1);

  SweepConfig parallel = c;
  parallel.parallelism = 3;
  const fs::path dir2 = FreshDir("sweep_b");
  Sweep(parallel, dir2.string());
  EXPECT_EQ(Slurp(dir2 / "runs.csv"), csv1);

  for (const auto& r : t1) {
    EXPECT_LE(r.wer_oracle, std::min(r.wer_1p, r.wer_2p));
    EXPECT_NEAR(r.wer_norm, NormalizedWer(r.wer_2p, r.wer_1p, r.wer_oracle), 1e-12);
    EXPECT_EQ(r.wall_time_s, 0.0);
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(SweepTest, ExtendingTheGridReusesCells) {
  SweepConfig c = TinySweep();
  c.models.resize(1);
  c.inits = {InitMode::kScratch};
  const fs::path dir = FreshDir("sweep_c");
  const auto first = Sweep(c, dir.string());
  c.replicates = {1, 2};
  SweepProgress p;
  const auto second = Sweep(c, dir.string(), &p);
  EXPECT_EQ(p.skipped, first.size());
  EXPECT_EQ(second.size(), 2 * first.size());
  fs::remove_all(dir);
}

TEST(SweepTest, FailedCellsAreLoggedAndSkippedOver) {
  SweepConfig c = TinySweep();
  c.models.resize(1);
  c.inits = {InitMode::kScratch};
  c.synth.p_sub = c.synth.p_ins = c.synth.p_del = 0.0;  // WER_norm undefined
  const fs::path dir = FreshDir("sweep_d");
  SweepProgress p;
  const auto table = Sweep(c, dir.string(), &p);
  EXPECT_TRUE(table.empty());
  EXPECT_EQ(p.failed, 2u);
  EXPECT_NE(Slurp(dir / "runs.jsonl").find("\"failed\""), std::string::npos);
  fs::remove_all(dir);
}

TEST(SweepConfigTest, ValidationAndJsonRoundTrip) {
  const SweepConfig c = TinySweep();
  const SweepConfig back = SweepConfigFromJson(SweepConfigToJson(c));
  EXPECT_EQ(SweepConfigToJson(back), SweepConfigToJson(c));
  EXPECT_THROW(SweepConfigFromJson("{\"d_values\": [1], \"bogus\": 2}"), std::invalid_argument);
  EXPECT_THROW(SweepConfigFromJson("{not json"), std::invalid_argument);
  SweepConfig empty = c;
  empty.d_values.clear();
  EXPECT_THROW(empty.Validate(), std::invalid_argument);
}

TEST(SweepConfigTest, ShippedDefaultParses) {
  const SweepConfig c = LoadSweepConfig(NBSCALE_SOURCE_DIR "/configs/default_sweep.json");
  EXPECT_EQ(c.models.size(), 4u);
  EXPECT_GE(c.replicates.size(), 3u);
  EXPECT_GE(*std::max_element(c.d_values.begin(), c.d_values.end()) /
                *std::min_element(c.d_values.begin(), c.d_values.end()),
            100);
}

TEST(RunConfigTest, JsonRoundTrip) {
  RunConfig c;
  c.init = InitMode::kPretrained;
  c.d = 42;
  c.w_grid = {0.0, 0.5};
  EXPECT_EQ(RunConfigToJson(RunConfigFromJson(RunConfigToJson(c))), RunConfigToJson(c));
}

TEST(RunsCsvTest, RoundTripIsExact) {
  std::vector<RunRecord> runs(2);
  runs[0] = {10, 1281, InitMode::kScratch, 1, 0.1 + 0.2, 0.25, 0.05, 0.8, 7, 1.5, 0.0};
  runs[1] = {300, 2737, InitMode::kPretrained, 3, 1.0 / 3.0, 0.2, 1e-17, 0.6, 2, 0.0, 0.0};
  std::stringstream ss;
  WriteRunsCsv(runs, ss);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')),
            "d,n,init,seed,wer_1p,wer_2p,wer_oracle,wer_norm,epochs,wall_time_s");
  EXPECT_EQ(ReadRunsCsv(ss), runs);
}

TEST(RunsCsvTest, MalformedRowsAreDataErrors) {
  std::stringstream bad_header("a,b\n");
  EXPECT_THROW(ReadRunsCsv(bad_header), DataError);
  std::stringstream bad_row(
      "d,n,init,seed,wer_1p,wer_2p,wer_oracle,wer_norm,epochs,wall_time_s\n"
      "10,100,scratch,1,0.1,0.1,x,1,1,0\n");
  EXPECT_THROW(ReadRunsCsv(bad_row), DataError);
}

}  // namespace
}  // namespace nbscale
