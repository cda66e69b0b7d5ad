// core/src/trainer.cc

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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "nbscale/encoder.h"
#include "nbscale/errors.h"
#include "nbscale/mwer.h"
#include "nbscale/rng.h"

namespace nbscale {

void TrainConfig::Validate() const {
  if (batch_size < 1 || max_epochs < 1 || patience < 1 || lr_decay_every < 1)
    throw std::invalid_argument("train config: counts must be positive");
  if (min_epoch_lists < 0)
    throw std::invalid_argument("train config: min_epoch_lists must be >= 0");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0)
    throw std::invalid_argument("train config: learning rate must be >= 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0))
    throw std::invalid_argument("train config: lr_decay must lie in (0, 1]");
}

double TrainConfig::LearningRateAt(int epoch) const {
  const int steps = std::max(0, epoch - 1) / lr_decay_every;
  return learning_rate * std::pow(lr_decay, steps);
}

Adam::Adam(size_t size, size_t begin, size_t end, AdamOptions options)
    : opt_(options), begin_(begin), end_(end), m_(size, 0.0), v_(size, 0.0) {
  if (begin > end || end > size) throw std::invalid_argument("Adam: bad range");
}

void Adam::Step(std::span<double> params, std::span<const double> grad, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (size_t i = begin_; i < end_; ++i) {
    const double g = grad[i];
    m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * g;
    v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + opt_.eps);
  }
}

std::vector<EncodedList> EncodeCorpus(const ScorerModel& model, const Corpus& corpus) {
  std::vector<EncodedList> out;
  out.reserve(corpus.size());
  for (const auto& list : corpus) {
    if (list.hyps.empty())
      throw DataError("utterance '" + list.utterance_id + "': empty n-best list");
    EncodedList e;
    e.ref_words = static_cast<int64_t>(list.reference.size());
    for (const auto& hyp : list.hyps) {
      if (!hyp.edit_dist)
        throw DataError("utterance '" + list.utterance_id +
                        "': edit distances not attached");
      e.inputs.push_back(PrepareInput(model, model.vocab().Encode(hyp.tokens)));
      e.first_pass.push_back(hyp.first_pass_score);
      e.eps.push_back(static_cast<double>(*hyp.edit_dist));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::vector<double>> ScoreEncoded(const ScorerModel& model,
                                              std::span<const EncodedList> lists) {
  std::vector<std::vector<double>> scores(lists.size());
  ScoreCache cache;
  for (size_t u = 0; u < lists.size(); ++u) {
    scores[u].reserve(lists[u].inputs.size());
    for (const auto& input : lists[u].inputs)
      scores[u].push_back(ScoreForward(model, input, cache));
  }
  return scores;
}

namespace {

size_t ArgMin(std::span<const double> v) {
  size_t best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

int64_t SelectedErrors(const EncodedList& list, std::span<const double> sp, double w) {
  size_t best = 0;
  double best_score = list.first_pass[0] + w * sp[0];
  for (size_t i = 1; i < sp.size(); ++i) {
    const double s = list.first_pass[i] + w * sp[i];
    if (s < best_score) {
      best_score = s;
      best = i;
    }
  }
  return std::llround(list.eps[best]);
}

}  // namespace

double WerTriple::wer_norm() const {
  return NormalizedWer(rescored.rate(), first_pass.rate(), oracle.rate());
}

WerTriple EvaluateEncoded(std::span<const EncodedList> lists,
                          const std::vector<std::vector<double>>& scores, double w) {
  WerTriple r;
  for (size_t u = 0; u < lists.size(); ++u) {
    const EncodedList& l = lists[u];
    r.first_pass.errors += std::llround(l.eps[ArgMin(l.first_pass)]);
    r.oracle.errors += std::llround(l.eps[ArgMin(l.eps)]);
    r.rescored.errors += SelectedErrors(l, scores[u], w);
    r.first_pass.ref_words += l.ref_words;
    r.oracle.ref_words += l.ref_words;
    r.rescored.ref_words += l.ref_words;
  }
  return r;
}

double BestWeight(std::span<const EncodedList> lists,
                  const std::vector<std::vector<double>>& scores,
                  std::span<const double> w_grid) {
  if (w_grid.empty()) throw std::invalid_argument("BestWeight: empty grid");
  double best_w = w_grid[0];
  int64_t best_errors = -1;
  for (double w : w_grid) {
    int64_t errors = 0;
    for (size_t u = 0; u < lists.size(); ++u)
      errors += SelectedErrors(lists[u], scores[u], w);
    if (best_errors < 0 || errors < best_errors) {
      best_errors = errors;
      best_w = w;
    }
  }
  return best_w;
}

double ListMwerLossAndGrad(const ScorerModel& model, const EncodedList& list,
                           std::span<double> grad, double weight, bool interpolated) {
  const size_t n = list.inputs.size();
  std::vector<ScoreCache> caches(n);
  MwerInstance instance;
  instance.scores.resize(n);
  instance.eps = list.eps;
  for (size_t i = 0; i < n; ++i) {
    const double sp = ScoreForward(model, list.inputs[i], caches[i]);
    instance.scores[i] = interpolated ? list.first_pass[i] + weight * sp : sp;
  }
  const MwerResult r = ComputeMwer(instance);
  if (grad.empty()) return r.loss;
  const double chain = interpolated ? weight : 1.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = chain * r.grad[i];
    if (d != 0.0) ScoreBackward(model, caches[i], d, grad);
  }
  return r.loss;
}

MlmResult MlmPretrain(ScorerModel model, const std::vector<std::vector<int>>& corpus,
                      const TrainConfig& config, double mask_rate) {
  config.Validate();
  if (corpus.empty()) throw std::invalid_argument("MlmPretrain: empty corpus");
  if (!(mask_rate > 0.0 && mask_rate < 1.0))
    throw std::invalid_argument("MlmPretrain: mask_rate must lie in (0, 1)");
  MlmResult result{std::move(model), {}, static_cast<int64_t>(corpus.size()), 0};
  ScorerModel& m = result.model;
  for (const auto& s : corpus) result.corpus_tokens += static_cast<int64_t>(s.size());

  const auto& vocab = m.vocab();
  const size_t total = m.layout().total;
  // The score head is excluded from pretraining updates.
  Adam adam(total, 0, m.layout().head_begin);
  std::vector<double> grad(total);
  Rng rng(CombineSeeds({config.seed, HashString("mlm-pretrain")}));
  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  struct Masked {
    std::vector<int> input, positions, targets;
  };
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.Shuffle(std::span<size_t>(order));
    const double lr = config.LearningRateAt(epoch);
    double epoch_loss = 0.0;
    int64_t epoch_masked = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<Masked> batch;
      int64_t masked = 0;
      for (size_t b = start; b < stop; ++b) {
        Masked item;
        item.input = PrepareInput(m, corpus[order[b]]);
        for (int p = 1; p < static_cast<int>(item.input.size()); ++p) {
          if (!rng.Bernoulli(mask_rate)) continue;
          item.positions.push_back(p);
          item.targets.push_back(item.input[p]);
          const double r = rng.Uniform();
          if (r < 0.8)
            item.input[p] = vocab.mask_id();
          else if (r < 0.9)
            item.input[p] = static_cast<int>(rng.UniformInt(vocab.size()));
        }
        masked += static_cast<int64_t>(item.positions.size());
        batch.push_back(std::move(item));
      }
      if (masked == 0) continue;
      std::fill(grad.begin(), grad.end(), 0.0);
      const double weight = 1.0 / static_cast<double>(masked);
      for (const auto& item : batch) {
        if (item.positions.empty()) continue;
        epoch_loss += MlmForwardBackward(m, item.input, item.positions,
                                         item.targets, weight, grad);
      }
      epoch_masked += masked;
      adam.Step(m.params(), grad, lr);
    }
    result.epoch_loss.push_back(
        epoch_masked > 0 ? epoch_loss / static_cast<double>(epoch_masked) : 0.0);
  }
  return result;
}

FinetuneResult MwerFinetune(ScorerModel model, std::span<const EncodedList> train,
                            std::span<const EncodedList> dev,
                            const TrainConfig& config,
                            const FinetuneOptions& options) {
  config.Validate();
  if (dev.empty()) throw DataError("MwerFinetune: empty dev set");
  std::vector<double> grid = options.dev_w_grid;
  if (grid.empty()) grid.push_back(options.weight.value());
  const double w = options.weight.value();
  const bool interp = config.mwer_on_interpolated;

  auto evaluate_dev = [&](const ScorerModel& m, EpochStats& stats) {
    const auto scores = ScoreEncoded(m, dev);
    stats.dev_weight = BestWeight(dev, scores, grid);
    stats.dev_wer_norm = EvaluateEncoded(dev, scores, stats.dev_weight).wer_norm();
  };

  FinetuneResult result{model, {}, 0, 0};
  EpochStats initial;
  for (const auto& list : train)
    initial.train_loss += ListMwerLossAndGrad(model, list, {}, w, interp);
  if (!train.empty()) initial.train_loss /= static_cast<double>(train.size());
  evaluate_dev(model, initial);
  result.history.push_back(initial);
  double best_dev = initial.dev_wer_norm;
  int since_best = 0;

  const size_t total = model.layout().total;
  const size_t begin = config.freeze_embeddings ? model.layout().embedding_end : 0;
  Adam adam(total, begin, total);
  std::vector<double> grad(total);
  Rng rng(CombineSeeds({config.seed, HashString("mwer-finetune")}));
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.max_epochs && !train.empty(); ++epoch) {
    const double lr = config.LearningRateAt(epoch);
    EpochStats stats;
    stats.epoch = epoch;
    size_t seen = 0;
    do {
      rng.Shuffle(std::span<size_t>(order));
      for (size_t start = 0; start < order.size(); start += config.batch_size) {
        const size_t stop = std::min(order.size(), start + config.batch_size);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (size_t b = start; b < stop; ++b)
          stats.train_loss += ListMwerLossAndGrad(model, train[order[b]], grad, w, interp);
        const double scale = 1.0 / static_cast<double>(stop - start);
        for (double& g : grad) g *= scale;
        adam.Step(model.params(), grad, lr);
      }
      seen += order.size();
    } while (seen < static_cast<size_t>(config.min_epoch_lists));
    stats.train_loss /= static_cast<double>(seen);
    evaluate_dev(model, stats);
    result.history.push_back(stats);
    result.epochs_trained = epoch;
    if (stats.dev_wer_norm < best_dev) {
      best_dev = stats.dev_wer_norm;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

GradCheckReport EndToEndGradientCheck(const ScorerModel& model,
                                      const EncodedList& list,
                                      const GradCheckOptions& options) {
  const auto& L = model.layout();
  std::vector<double> analytic(L.total, 0.0);
  ListMwerLossAndGrad(model, list, analytic);

  // Candidate parameters: everything the score can depend on. Rows of the
  // embedding tables for unseen tokens or positions, and the masked-token
  // bias, have identically zero gradient and are left out.
  std::vector<size_t> candidates;
  std::vector<bool> token_used(model.config().model_vocab(), false);
  size_t max_len = 0;
  for (const auto& input : list.inputs) {
    for (int id : input) token_used[id] = true;
    max_len = std::max(max_len, input.size());
  }
  const size_t h = model.config().hidden;
  for (size_t r = 0; r < L.tok_emb.rows; ++r)
    if (token_used[r])
      for (size_t c = 0; c < h; ++c) candidates.push_back(L.tok_emb.offset + r * h + c);
  for (size_t r = 0; r < max_len; ++r)
    for (size_t c = 0; c < h; ++c) candidates.push_back(L.pos_emb.offset + r * h + c);
  for (size_t i = L.emb_ln_g.offset; i < L.mlm_bias.offset; ++i) candidates.push_back(i);
  for (size_t i = L.embedding_end; i < L.total; ++i) candidates.push_back(i);

  Rng rng(CombineSeeds({options.seed, HashString("gradcheck")}));
  rng.Shuffle(std::span<size_t>(candidates));
  const size_t count =
      std::min(candidates.size(), static_cast<size_t>(std::max(0, options.num_params)));

  ScorerModel probe = model;
  GradCheckReport report;
  for (size_t k = 0; k < count; ++k) {
    const size_t idx = candidates[k];
    const double orig = probe.params()[idx];
    probe.params()[idx] = orig + options.step;
    const double plus = ListMwerLossAndGrad(probe, list, {});
    probe.params()[idx] = orig - options.step;
    const double minus = ListMwerLossAndGrad(probe, list, {});
    probe.params()[idx] = orig;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double a = analytic[idx];
    const double abs_err = std::abs(a - numeric);
    const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    report.max_rel_error = std::max(report.max_rel_error, abs_err / denom);
    report.max_abs_analytic = std::max(report.max_abs_analytic, std::abs(a));
    ++report.checked;
  }
  return report;
}

void WriteHistoryCsv(const std::vector<EpochStats>& history, std::ostream& out) {
  out << "epoch,train_loss,dev_wer_norm\n";
  char buf[128];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", e.epoch, e.train_loss,
                  e.dev_wer_norm);
    out << buf;
  }
}

}  // namespace nbscale
