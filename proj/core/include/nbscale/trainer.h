// core/include/nbscale/trainer.h

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

#ifndef NBSCALE_TRAINER_H_
#define NBSCALE_TRAINER_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nbscale/nbest.h"
#include "nbscale/scorer.h"
#include "nbscale/types.h"

namespace nbscale {

struct TrainConfig {
  int batch_size = 32;         // n-best sets (or sentences) per step
  double learning_rate = 1e-3;
  int max_epochs = 10;
  int patience = 3;            // epochs without dev improvement before stopping
  uint64_t seed = 1;
  double lr_decay = 0.5;       // step decay factor
  int lr_decay_every = 4;      // epochs per decay step
  // An epoch repeats reshuffled passes over the training set until at least
  // this many n-best sets were seen; keeps the step count sane for tiny d.
  int min_epoch_lists = 0;
  // Feed s^f + w * s^s into the MWER softmax instead of s^s alone.
  bool mwer_on_interpolated = false;
  bool freeze_embeddings = false;

  // Throws std::invalid_argument unless all counts are positive, the
  // learning rate is non-negative and the decay lies in (0, 1].
  void Validate() const;
  double LearningRateAt(int epoch) const;  // epoch is 1-based
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam restricted to the index range [begin, end) of the parameter vector.
class Adam {
 public:
  Adam(size_t size, size_t begin, size_t end, AdamOptions options = {});
  void Step(std::span<double> params, std::span<const double> grad, double lr);
  int64_t steps() const { return t_; }

 private:
  AdamOptions opt_;
  size_t begin_, end_;
  std::vector<double> m_, v_;
  int64_t t_ = 0;
};

// An n-best list pre-encoded for the scorer.
struct EncodedList {
  std::vector<std::vector<int>> inputs;  // prepared (classification-prefixed)
  std::vector<double> first_pass;
  std::vector<double> eps;
  int64_t ref_words = 0;
};

// Requires edit distances attached (throws DataError otherwise).
std::vector<EncodedList> EncodeCorpus(const ScorerModel& model, const Corpus& corpus);

// Second-pass scores for every hypothesis of every list.
std::vector<std::vector<double>> ScoreEncoded(const ScorerModel& model,
                                              std::span<const EncodedList> lists);

struct WerTriple {
  WerReport first_pass;
  WerReport rescored;
  WerReport oracle;
  double wer_norm() const;
};

// WERs of a scored encoded corpus at weight w.
WerTriple EvaluateEncoded(std::span<const EncodedList> lists,
                          const std::vector<std::vector<double>>& scores,
                          double w);

// The grid weight with the lowest rescored WER (ties -> first in grid).
double BestWeight(std::span<const EncodedList> lists,
                  const std::vector<std::vector<double>>& scores,
                  std::span<const double> w_grid);

struct MlmResult {
  ScorerModel model;
  std::vector<double> epoch_loss;  // mean cross-entropy per masked token
  int64_t corpus_sentences = 0;
  int64_t corpus_tokens = 0;
};

// Masked-token pretraining. Each non-classification position is selected
// with probability mask_rate; selected positions become the mask token
// (80%), a random token (10%) or stay unchanged (10%). The score head is not
// updated. Batches with no selected position are skipped.
MlmResult MlmPretrain(ScorerModel model, const std::vector<std::vector<int>>& corpus,
                      const TrainConfig& config, double mask_rate);

struct EpochStats {
  int epoch = 0;              // 0 = initial model
  double train_loss = 0.0;    // mean MWER loss over training lists
  double dev_wer_norm = 0.0;
  double dev_weight = 0.0;    // best grid weight on dev
};

struct FinetuneOptions {
  InterpolationWeight weight{1.0};  // used when mwer_on_interpolated
  std::vector<double> dev_w_grid;   // dev WER_norm uses the best weight here;
                                    // empty means {weight}
};

struct FinetuneResult {
  ScorerModel model;                // best-dev checkpoint
  std::vector<EpochStats> history;
  int best_epoch = 0;
  int epochs_trained = 0;
};

// MWER fine-tuning with Adam and early stopping on dev WER_norm. Throws
// DataError if dev is empty or its first-pass WER does not exceed oracle.
FinetuneResult MwerFinetune(ScorerModel model, std::span<const EncodedList> train,
                            std::span<const EncodedList> dev,
                            const TrainConfig& config,
                            const FinetuneOptions& options);

// MWER loss of one list under the model's second-pass scores; accumulates
// dL/dparams into grad when it is non-empty.
double ListMwerLossAndGrad(const ScorerModel& model, const EncodedList& list,
                           std::span<double> grad, double weight = 0.0,
                           bool interpolated = false);

struct GradCheckOptions {
  int num_params = 200;
  double step = 1e-4;
  uint64_t seed = 7;
  // Relative error is |a - n| / max(|a|, |n|, abs_floor).
  double abs_floor = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  double max_abs_analytic = 0.0;
  int checked = 0;
};

// Compares the chained analytic gradient of the MWER loss on one list with
// central finite differences at randomly chosen parameters.
GradCheckReport EndToEndGradientCheck(const ScorerModel& model,
                                      const EncodedList& list,
                                      const GradCheckOptions& options = {});

// epoch,train_loss,dev_wer_norm
void WriteHistoryCsv(const std::vector<EpochStats>& history, std::ostream& out);

}  // namespace nbscale

#endif  // NBSCALE_TRAINER_H_
