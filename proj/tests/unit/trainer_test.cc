// tests/unit/trainer_test.cc

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

#include "nbscale/trainer.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nbscale/errors.h"
#include "nbscale/experiment.h"
#include "nbscale/synth.h"

namespace nbscale {
namespace {

ScorerConfig Small(int vocab = 12) {
  ScorerConfig c;
  c.vocab_size = vocab;
  c.hidden = 8;
  c.layers = 1;
  c.heads = 2;
  c.ffn_dim = 16;
  c.max_len = 16;
  c.seed = 5;
  return c;
}

SynthConfig SmallSynth() {
  SynthConfig s;
  s.vocab_size = 12;
  s.successors = 3;
  s.train_size = 60;
  s.dev_size = 40;
  s.test_size = 40;
  s.nbest_depth = 5;
  return s;
}

// Lists where every erroneous hypothesis contains the token "w0" and the
// reference never does, so a scorer can rank them perfectly.
Corpus PlantedCorpus(int lists, uint64_t seed) {
  Rng rng(seed);
  Corpus corpus;
  for (int u = 0; u < lists; ++u) {
    NBestList list{"p" + std::to_string(u), {}, {}};
    const int len = 3 + static_cast<int>(rng.UniformInt(3));
    for (int i = 0; i < len; ++i)
      list.reference.push_back("w" + std::to_string(1 + rng.UniformInt(9)));
    for (int h = 0; h < 4; ++h) {
      TokenSeq t = list.reference;
      for (int e = 0; e < h; ++e) t[rng.UniformInt(t.size())] = "w0";
      list.hyps.push_back({t, rng.Normal(), {}, {}});
    }
    corpus.push_back(list);
  }
  AttachEditDistances(corpus);
  return corpus;
}

TEST(TrainConfigTest, StepDecayAndValidation) {
  TrainConfig t;
  t.learning_rate = 0.1;
  t.lr_decay = 0.5;
  t.lr_decay_every = 2;
  EXPECT_DOUBLE_EQ(t.LearningRateAt(1), 0.1);
  EXPECT_DOUBLE_EQ(t.LearningRateAt(2), 0.1);
  EXPECT_DOUBLE_EQ(t.LearningRateAt(3), 0.05);
  EXPECT_DOUBLE_EQ(t.LearningRateAt(5), 0.025);
  t.batch_size = 0;
  EXPECT_THROW(t.Validate(), std::invalid_argument);
}

TEST(AdamTest, UpdatesOnlyItsRange) {
  std::vector<double> p{1.0, 1.0, 1.0, 1.0};
  const std::vector<double> g{1.0, -1.0, 1.0, 1.0};
  Adam adam(4, 1, 3);
  adam.Step(p, g, 0.1);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[3], 1.0);
  // The first Adam step moves by lr * sign(g) up to the epsilon term.
  EXPECT_NEAR(p[1], 1.1, 1e-6);
  EXPECT_NEAR(p[2], 0.9, 1e-6);
}

TEST(EncodeCorpusTest, RequiresEditDistances) {
  Corpus c = PlantedCorpus(2, 1);
  c[1].hyps[0].edit_dist.reset();
  EXPECT_THROW(EncodeCorpus(InitModel(Small()), c), DataError);
}

TEST(GradientCheckTest, TinyModel) {
  const ScorerModel m = InitModel(Small());
  const auto lists = EncodeCorpus(m, PlantedCorpus(1, 3));
  const GradCheckReport r = EndToEndGradientCheck(m, lists[0]);
  EXPECT_GE(r.checked, 200);
  EXPECT_LE(r.max_rel_error, 1e-4);
  EXPECT_GT(r.max_abs_analytic, 0.0);
}

TEST(GradientCheckTest, EqualErrorsGiveZeroGradient) {
  const ScorerModel m = InitModel(Small());
  Corpus c = PlantedCorpus(1, 3);
  for (auto& h : c[0].hyps) h.tokens = c[0].reference;
  AttachEditDistances(c);
  const auto lists = EncodeCorpus(m, c);
  const GradCheckReport r = EndToEndGradientCheck(m, lists[0]);
  EXPECT_EQ(r.max_abs_analytic, 0.0);
  EXPECT_LE(r.max_abs_error, 1e-8);
}

TEST(GradientCheckTest, Deterministic) {
  const ScorerModel m = InitModel(Small());
  const auto lists = EncodeCorpus(m, PlantedCorpus(1, 4));
  const GradCheckReport a = EndToEndGradientCheck(m, lists[0]);
  const GradCheckReport b = EndToEndGradientCheck(m, lists[0]);
  EXPECT_EQ(a.max_rel_error, b.max_rel_error);
  EXPECT_EQ(a.max_abs_error, b.max_abs_error);
}

TEST(GradientCheckTest, InterpolatedLossGradient) {
  const ScorerModel m = InitModel(Small());
  const auto lists = EncodeCorpus(m, PlantedCorpus(1, 6));
  std::vector<double> grad(m.params().size(), 0.0);
  ListMwerLossAndGrad(m, lists[0], grad, 0.7, true);
  ScorerModel probe = m;
  const size_t i = m.layout().out_b.offset - 3;
  const double h = 1e-5, saved = probe.params()[i];
  probe.params()[i] = saved + h;
  const double up = ListMwerLossAndGrad(probe, lists[0], {}, 0.7, true);
  probe.params()[i] = saved - h;
  const double down = ListMwerLossAndGrad(probe, lists[0], {}, 0.7, true);
  EXPECT_NEAR(grad[i], (up - down) / (2 * h), 1e-7);
}

TEST(ListMwerTest, SingleHypothesisContributesNothing) {
  const ScorerModel m = InitModel(Small());
  Corpus c = PlantedCorpus(1, 2);
  c[0].hyps.resize(1);
  const auto lists = EncodeCorpus(m, c);
  std::vector<double> grad(m.params().size(), 0.0);
  EXPECT_EQ(ListMwerLossAndGrad(m, lists[0], grad), 0.0);
  for (double g : grad) ASSERT_EQ(g, 0.0);
}

TEST(BestWeightTest, ZeroWeightReproducesFirstPass) {
  const ScorerModel m = InitModel(Small());
  const auto lists = EncodeCorpus(m, PlantedCorpus(30, 8));
  const auto scores = ScoreEncoded(m, lists);
  const WerTriple t = EvaluateEncoded(lists, scores, 0.0);
  EXPECT_EQ(t.rescored, t.first_pass);
  EXPECT_EQ(t.wer_norm(), 1.0);
}

TEST(MwerFinetuneTest, ZeroLearningRateLeavesModelUnchanged) {
  const ScorerModel m = InitModel(Small());
  const auto train = EncodeCorpus(m, PlantedCorpus(20, 1));
  const auto dev = EncodeCorpus(m, PlantedCorpus(10, 2));
  TrainConfig t;
  t.learning_rate = 0.0;
  t.max_epochs = 2;
  const FinetuneResult r = MwerFinetune(m, train, dev, t, {});
  EXPECT_TRUE(r.model == m);
}

TEST(MwerFinetuneTest, EmptyDevIsAnError) {
  const ScorerModel m = InitModel(Small());
  const auto train = EncodeCorpus(m, PlantedCorpus(5, 1));
  EXPECT_THROW(MwerFinetune(m, train, {}, TrainConfig{}, {}), DataError);
}

TEST(MwerFinetuneTest, PlantedSignalApproachesLowerBound) {
  const ScorerModel m = InitModel(Small());
  const Corpus train_c = PlantedCorpus(80, 11);
  const auto train = EncodeCorpus(m, train_c);
  const auto dev = EncodeCorpus(m, PlantedCorpus(30, 12));
  // Lower bound of the mean loss: all posterior mass on the best hypothesis.
  double bound = 0.0;
  for (const auto& l : train) {
    double mean = 0.0;
    for (double e : l.eps) mean += e;
    mean /= l.eps.size();
    bound += *std::min_element(l.eps.begin(), l.eps.end()) - mean;
  }
  bound /= train.size();
  TrainConfig t;
  t.learning_rate = 1e-2;
  t.batch_size = 8;
  t.max_epochs = 40;
  t.patience = 40;
  t.lr_decay_every = 100;
  const FinetuneResult r = MwerFinetune(m, train, dev, t, {});
  EXPECT_LT(r.history.back().train_loss, 0.9 * bound);
  EXPECT_GT(r.history.front().train_loss, 0.5 * bound);
}

TEST(MwerFinetuneTest, ReturnsBestDevCheckpoint) {
  const ScorerModel m = InitModel(Small());
  const auto train = EncodeCorpus(m, PlantedCorpus(30, 21));
  const auto dev = EncodeCorpus(m, PlantedCorpus(20, 22));
  TrainConfig t;
  t.learning_rate = 5e-3;
  t.max_epochs = 6;
  FinetuneOptions opt;
  opt.dev_w_grid = DefaultWeightGrid();
  const FinetuneResult r = MwerFinetune(m, train, dev, t, opt);
  double best = r.history[0].dev_wer_norm;
  for (const auto& e : r.history) best = std::min(best, e.dev_wer_norm);
  EXPECT_EQ(r.history[r.best_epoch].dev_wer_norm, best);
  EXPECT_LE(best, r.history[0].dev_wer_norm);
  const auto scores = ScoreEncoded(r.model, dev);
  const double w = BestWeight(dev, scores, opt.dev_w_grid);
  EXPECT_EQ(EvaluateEncoded(dev, scores, w).wer_norm(), best);
}

TEST(MwerFinetuneTest, Deterministic) {
  const ScorerModel m = InitModel(Small());
  const auto train = EncodeCorpus(m, PlantedCorpus(20, 31));
  const auto dev = EncodeCorpus(m, PlantedCorpus(10, 32));
  TrainConfig t;
  t.max_epochs = 3;
  const FinetuneResult a = MwerFinetune(m, train, dev, t, {});
  const FinetuneResult b = MwerFinetune(m, train, dev, t, {});
  EXPECT_TRUE(a.model == b.model);
  std::stringstream sa, sb;
  WriteHistoryCsv(a.history, sa);
  WriteHistoryCsv(b.history, sb);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(sa.str().substr(0, 30), "epoch,train_loss,dev_wer_norm\n");
}

TEST(MwerFinetuneTest, MinEpochListsRepeatsPasses) {
  const ScorerModel m = InitModel(Small());
  const auto train = EncodeCorpus(m, PlantedCorpus(8, 33));
  const auto dev = EncodeCorpus(m, PlantedCorpus(6, 34));
  TrainConfig t;
  t.max_epochs = 3;
  t.patience = 10;
  t.lr_decay_every = 100;
  const FinetuneResult three = MwerFinetune(m, train, dev, t, {});
  // A floor at or below the training size changes nothing.
  t.min_epoch_lists = static_cast<int>(train.size());
  const FinetuneResult same = MwerFinetune(m, train, dev, t, {});
  EXPECT_TRUE(three.model == same.model);
  // Three passes folded into one epoch follow the same update sequence.
  t.max_epochs = 1;
  t.min_epoch_lists = 2 * static_cast<int>(train.size()) + 1;
  const FinetuneResult one = MwerFinetune(m, train, dev, t, {});
  ASSERT_EQ(one.history.size(), 2u);
  ASSERT_EQ(three.history.size(), 4u);
  const double mean = (three.history[1].train_loss + three.history[2].train_loss +
                       three.history[3].train_loss) / 3.0;
  EXPECT_NEAR(one.history[1].train_loss, mean, 1e-12);
  t.min_epoch_lists = -1;
  EXPECT_THROW(t.Validate(), std::invalid_argument);
}

TEST(MlmPretrainTest, LossDecreasesAndHeadIsUntouched) {
  const SynthConfig s = SmallSynth();
  const auto corpus = PretrainingCorpus(s, 500, 7);
  const ScorerModel m = InitModel(Small());
  TrainConfig t;
  t.batch_size = 16;
  t.learning_rate = 5e-3;
  t.max_epochs = 3;
  const MlmResult r = MlmPretrain(m, corpus, t, 0.15);
  ASSERT_EQ(r.epoch_loss.size(), 3u);
  EXPECT_LE(r.epoch_loss[2], r.epoch_loss[0]);
  EXPECT_EQ(r.corpus_sentences, 500);
  EXPECT_GT(r.corpus_tokens, 500);
  const size_t head = m.layout().head_begin;
  for (size_t i = head; i < m.params().size(); ++i)
    ASSERT_EQ(r.model.params()[i], m.params()[i]);
  EXPECT_FALSE(r.model == m);
  EXPECT_TRUE(MlmPretrain(m, corpus, t, 0.15).model == r.model);
}

TEST(MlmPretrainTest, RejectsBadMaskRate) {
  const auto corpus = PretrainingCorpus(SmallSynth(), 10, 1);
  EXPECT_THROW(MlmPretrain(InitModel(Small()), corpus, TrainConfig{}, 0.0),
               std::invalid_argument);
  EXPECT_THROW(MlmPretrain(InitModel(Small()), corpus, TrainConfig{}, 1.0),
               std::invalid_argument);
}

}  // namespace
}  // namespace nbscale
