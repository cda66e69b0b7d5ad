// core/include/nbscale/experiment.h

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

#ifndef NBSCALE_EXPERIMENT_H_
#define NBSCALE_EXPERIMENT_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nbscale/scorer.h"
#include "nbscale/synth.h"
#include "nbscale/trainer.h"
#include "nbscale/types.h"

namespace nbscale {

enum class InitMode { kScratch, kPretrained };

const char* InitModeName(InitMode mode);  // "scratch" / "pretrained"
InitMode ParseInitMode(const std::string& name);

// One experiment cell: data size d, model size n, init mode and replicate.
struct RunRecord {
  int64_t d = 0;
  int64_t n = 0;
  InitMode init = InitMode::kScratch;
  uint64_t seed = 0;  // replicate seed
  double wer_1p = 0.0;
  double wer_2p = 0.0;
  double wer_oracle = 0.0;
  double wer_norm = 0.0;
  int epochs = 0;
  double wall_time_s = 0.0;
  double weight = 0.0;  // dev-selected interpolation weight

  bool operator==(const RunRecord&) const = default;
};

struct PretrainConfig {
  int corpus_sentences = 20000;
  double mask_rate = 0.15;
  TrainConfig train{.batch_size = 64, .learning_rate = 2e-3, .max_epochs = 4};
};

// Masked pretraining on PretrainingCorpus(synth, ...). Deterministic in
// (scorer config, synth config, pretrain config, seed).
ScorerModel PretrainModel(const ScorerConfig& scorer, const SynthConfig& synth,
                          const PretrainConfig& pretrain, uint64_t seed);

struct RunOptions {
  ScorerConfig scorer;
  TrainConfig train;
  InitMode init = InitMode::kScratch;
  std::vector<double> w_grid;
  uint64_t seed = 1;  // drives model/head init and batch order
};

// Default grid {0, 0.1, ..., 2.0}.
std::vector<double> DefaultWeightGrid();

struct RunDetails {
  std::optional<FinetuneResult> finetune;
};

// Fine-tunes (from `pretrained` when given, with a fresh head, otherwise
// from a random init), selects w on dev and reports test WERs. Corpora need
// edit distances attached.
RunRecord RunExperiment(const Corpus& train, const Corpus& dev, const Corpus& test,
                        const RunOptions& options,
                        const ScorerModel* pretrained = nullptr,
                        RunDetails* details = nullptr);

struct SweepConfig {
  SynthConfig synth;
  std::vector<int64_t> d_values;
  std::vector<ScorerConfig> models;
  std::vector<InitMode> inits{InitMode::kScratch, InitMode::kPretrained};
  std::vector<uint64_t> replicates{1};
  TrainConfig train;
  PretrainConfig pretrain;
  std::vector<double> w_grid = DefaultWeightGrid();
  uint64_t seed = 1;
  int parallelism = 1;
  // When false, wall_time_s is written as 0 so tables are byte-comparable.
  bool record_wall_time = true;

  void Validate() const;
};

// Seed of one cell: hash(sweep seed, d, n, init, replicate).
uint64_t CellSeed(uint64_t sweep_seed, int64_t d, int64_t n, InitMode init,
                  uint64_t replicate);

struct SweepProgress {
  size_t total = 0;
  size_t skipped = 0;  // completed in an earlier invocation
  size_t completed = 0;
  size_t failed = 0;
};

// Runs every (model, d, init, replicate) cell, appending each result to
// out_dir/runs.jsonl as it finishes and rewriting out_dir/runs.csv at the
// end. Cells already completed in runs.jsonl under the same configuration
// are skipped. Failed cells are logged and the sweep continues. Returns the
// table in grid order.
std::vector<RunRecord> Sweep(const SweepConfig& config, const std::string& out_dir,
                             SweepProgress* progress = nullptr,
                             const std::function<void(const std::string&)>& log = {});

// Runs table CSV: d,n,init,seed,wer_1p,wer_2p,wer_oracle,wer_norm,epochs,wall_time_s
void WriteRunsCsv(const std::vector<RunRecord>& runs, std::ostream& out);
void WriteRunsCsv(const std::vector<RunRecord>& runs, const std::string& path);
std::vector<RunRecord> ReadRunsCsv(std::istream& in);
std::vector<RunRecord> ReadRunsCsv(const std::string& path);

// JSON (de)serialization of configs, as a single structured document.
std::string SweepConfigToJson(const SweepConfig& config);
SweepConfig SweepConfigFromJson(const std::string& text);
SweepConfig LoadSweepConfig(const std::string& path);
std::string SynthConfigToJson(const SynthConfig& config);
SynthConfig SynthConfigFromJson(const std::string& text);
std::string ScorerConfigToJson(const ScorerConfig& config);
ScorerConfig ScorerConfigFromJson(const std::string& text);
std::string TrainConfigToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const std::string& text);

// Configuration of a single run: the data source (used when no corpus files
// are given and for the pretraining corpus), the scorer and the training.
struct RunConfig {
  SynthConfig synth;
  ScorerConfig scorer;
  TrainConfig train;
  PretrainConfig pretrain;
  InitMode init = InitMode::kScratch;
  std::vector<double> w_grid = DefaultWeightGrid();
  uint64_t seed = 1;
  int64_t d = 0;  // leading training lists to use; 0 = all

  void Validate() const;
};
std::string RunConfigToJson(const RunConfig& config);
RunConfig RunConfigFromJson(const std::string& text);
RunConfig LoadRunConfig(const std::string& path);

// The four toy encoder shapes (S, M, L, XL). All have at least two layers:
// a single layer pooled at the classification token cannot see token pairs.
// Non-embedding sizes are 1281, 2737, 15241 and 43585 parameters.
std::vector<ScorerConfig> ToyModelShapes(int vocab_size, int max_len);

}  // namespace nbscale

#endif  // NBSCALE_EXPERIMENT_H_
