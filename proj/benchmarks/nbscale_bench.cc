// benchmarks/nbscale_bench.cc

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

// Microbenchmarks for the inner loops: edit distance, the MWER loss and
// gradient, scorer forward/backward per toy shape, and n-best evaluation.

#include <benchmark/benchmark.h>

#include <vector>

#include "nbscale/encoder.h"
#include "nbscale/experiment.h"
#include "nbscale/metrics.h"
#include "nbscale/mwer.h"
#include "nbscale/rng.h"
#include "nbscale/scorer.h"
#include "nbscale/synth.h"
#include "nbscale/trainer.h"

namespace nbscale {
namespace {

void BM_EditDistance(benchmark::State& state) {
  Rng rng(1);
  const int len = static_cast<int>(state.range(0));
  std::vector<int> a(len), b(len);
  for (auto& x : a) x = static_cast<int>(rng.UniformInt(20));
  for (auto& x : b) x = static_cast<int>(rng.UniformInt(20));
  for (auto _ : state)
    benchmark::DoNotOptimize(EditDistance<int>(std::span<const int>(a), std::span<const int>(b)));
  state.SetComplexityN(len);
}
BENCHMARK(BM_EditDistance)->RangeMultiplier(2)->Range(8, 256)->Complexity(benchmark::oNSquared);

void BM_MwerLossAndGradient(benchmark::State& state) {
  Rng rng(2);
  MwerInstance inst;
  for (int i = 0; i < state.range(0); ++i) {
    inst.scores.push_back(rng.Normal());
    inst.eps.push_back(static_cast<double>(rng.UniformInt(6)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(ComputeMwer(inst));
}
BENCHMARK(BM_MwerLossAndGradient)->Arg(4)->Arg(8)->Arg(20)->Arg(100);

std::vector<int> SampleInput(const ScorerModel& model) {
  SynthConfig s;
  Rng rng(3);
  return PrepareInput(model, MarkovSource(s).SampleIds(rng));
}

void BM_ScoreForward(benchmark::State& state) {
  const ScorerModel model = InitModel(ToyModelShapes(20, 24)[state.range(0)]);
  const std::vector<int> input = SampleInput(model);
  ScoreCache cache;
  for (auto _ : state) benchmark::DoNotOptimize(ScoreForward(model, input, cache));
  state.counters["params"] = static_cast<double>(model.NonEmbeddingParams());
}
BENCHMARK(BM_ScoreForward)->DenseRange(0, 3);

void BM_ScoreForwardBackward(benchmark::State& state) {
  const ScorerModel model = InitModel(ToyModelShapes(20, 24)[state.range(0)]);
  const std::vector<int> input = SampleInput(model);
  std::vector<double> grad(model.params().size());
  ScoreCache cache;
  for (auto _ : state) {
    ScoreForward(model, input, cache);
    ScoreBackward(model, cache, 1.0, grad);
    benchmark::ClobberMemory();
  }
  state.counters["params"] = static_cast<double>(model.NonEmbeddingParams());
}
BENCHMARK(BM_ScoreForwardBackward)->DenseRange(0, 3);

void BM_ListMwerStep(benchmark::State& state) {
  SynthConfig s;
  s.train_size = 1;
  s.dev_size = 1;
  s.test_size = 1;
  s.nbest_depth = 8;
  const ScorerModel model = InitModel(ToyModelShapes(20, 24)[state.range(0)]);
  const auto lists = EncodeCorpus(model, SynthCorpus(s).train);
  std::vector<double> grad(model.params().size());
  for (auto _ : state) benchmark::DoNotOptimize(ListMwerLossAndGrad(model, lists[0], grad));
}
BENCHMARK(BM_ListMwerStep)->DenseRange(0, 3);

}  // namespace
}  // namespace nbscale

BENCHMARK_MAIN();
