// tools/nbscale_main.cc

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

// Command-line front end: corpus synthesis, single runs, sweeps, scaling
// law fits and predictions, and n-best rescoring.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nbscale/errors.h"
#include "nbscale/experiment.h"
#include "nbscale/metrics.h"
#include "nbscale/nbest.h"
#include "nbscale/report.h"
#include "nbscale/scorer.h"
#include "nbscale/synth.h"

namespace {

using namespace nbscale;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitIdentifiability = 3;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void PrintCorpusStats(const char* name, const Corpus& c) {
  const double wer_1p = FirstPassWer(c).rate();
  const double oracle = OracleWer(c).rate();
  std::printf("%-5s lists=%zu wer_1p=%.4f wer_oracle=%.4f oracle_reduction=%.1f%%\n",
              name, c.size(), wer_1p, oracle,
              wer_1p > 0.0 ? 100.0 * (wer_1p - oracle) / wer_1p : 0.0);
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string config, out_dir;
  std::optional<uint64_t> seed;
};

int RunSynth(const SynthArgs& a) {
  SynthConfig config = a.config.empty() ? SynthConfig{} : SynthConfigFromJson(ReadFile(a.config));
  if (a.seed) config.seed = *a.seed;
  const SynthCorpora data = SynthCorpus(config);
  fs::create_directories(a.out_dir);
  WriteCorpus(data.train, (fs::path(a.out_dir) / "train.jsonl").string());
  WriteCorpus(data.dev, (fs::path(a.out_dir) / "dev.jsonl").string());
  WriteCorpus(data.test, (fs::path(a.out_dir) / "test.jsonl").string());
  std::ofstream(fs::path(a.out_dir) / "synth_config.json") << SynthConfigToJson(config) << '\n';
  if (data.degenerate_margin) {
    std::printf("degenerate margin: no corruption configured, oracle equals first pass\n");
  } else {
    PrintCorpusStats("train", data.train);
    PrintCorpusStats("dev", data.dev);
    PrintCorpusStats("test", data.test);
  }
  std::printf("generation attempts: %d\n", data.attempts);
  return kExitOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config, train, dev, test, pretrained, out_dir;
  std::optional<uint64_t> seed;
  std::optional<std::string> init;
  bool no_wall_time = false;
};

Corpus LoadWithEdits(const std::string& path) {
  Corpus c = ReadCorpus(path);
  AttachEditDistances(c);
  return c;
}

int RunTrain(const TrainArgs& a) {
  RunConfig config = a.config.empty() ? RunConfig{} : LoadRunConfig(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.init) config.init = ParseInitMode(*a.init);
  const bool from_files = !a.train.empty();
  if (from_files && (a.dev.empty() || a.test.empty()))
    throw std::invalid_argument("--train requires --dev and --test");
  Corpus train, dev, test;
  if (from_files) {
    train = LoadWithEdits(a.train);
    dev = LoadWithEdits(a.dev);
    test = LoadWithEdits(a.test);
  } else {
    SynthConfig s = config.synth;
    if (config.d > 0) s.train_size = static_cast<int>(config.d);
    SynthCorpora data = SynthCorpus(s);
    train = std::move(data.train);
    dev = std::move(data.dev);
    test = std::move(data.test);
  }
  if (config.d > 0) {
    if (config.d > static_cast<int64_t>(train.size()))
      throw DataError("d exceeds the number of training lists");
    train.resize(config.d);
  }

  std::optional<ScorerModel> pretrained;
  if (config.init == InitMode::kPretrained) {
    if (!a.pretrained.empty()) {
      pretrained = LoadCheckpoint(a.pretrained);
      if (!(pretrained->config().hidden == config.scorer.hidden &&
            pretrained->config().layers == config.scorer.layers))
        std::fprintf(stderr, "note: using the shape of the pretrained checkpoint\n");
      config.scorer = pretrained->config();
    } else {
      std::fprintf(stderr, "pretraining on %d synthetic sentences\n",
                   config.pretrain.corpus_sentences);
      pretrained = PretrainModel(config.scorer, config.synth, config.pretrain,
                                 CombineSeeds({config.seed, HashString("pretrain")}));
    }
  }

  RunOptions opt;
  opt.scorer = config.scorer;
  opt.train = config.train;
  opt.init = config.init;
  opt.w_grid = config.w_grid;
  opt.seed = config.seed;
  RunDetails details;
  RunRecord r = RunExperiment(train, dev, test, opt, pretrained ? &*pretrained : nullptr,
                              &details);
  if (a.no_wall_time) r.wall_time_s = 0.0;
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  SaveCheckpoint(details.finetune->model, (dir / "model.ckpt").string());
  {
    std::ofstream h(dir / "history.csv");
    WriteHistoryCsv(details.finetune->history, h);
  }
  WriteRunsCsv({r}, (dir / "run.csv").string());
  std::ofstream(dir / "run_config.json") << RunConfigToJson(config) << '\n';
  std::printf("d=%lld n=%lld init=%s epochs=%d w=%g\n", static_cast<long long>(r.d),
              static_cast<long long>(r.n), InitModeName(r.init), r.epochs, r.weight);
  std::printf("wer_1p=%.4f wer_2p=%.4f wer_oracle=%.4f wer_norm=%.4f\n", r.wer_1p, r.wer_2p,
              r.wer_oracle, r.wer_norm);
  return kExitOk;
}

// --- sweep ------------------------------------------------------------------

struct SweepArgs {
  std::string config, out_dir;
  std::optional<int> parallelism;
  bool no_wall_time = false;
};

int RunSweepCommand(const SweepArgs& a) {
  SweepConfig config = LoadSweepConfig(a.config);
  if (a.parallelism) config.parallelism = *a.parallelism;
  if (a.no_wall_time) config.record_wall_time = false;
  SweepProgress progress;
  const auto table = Sweep(config, a.out_dir, &progress, [](const std::string& msg) {
    std::fprintf(stderr, "%s\n", msg.c_str());
  });
  std::printf("cells=%zu skipped=%zu completed=%zu failed=%zu rows=%zu\n", progress.total,
              progress.skipped, progress.completed, progress.failed, table.size());
  return progress.failed ? kExitData : kExitOk;
}

// --- fit-scaling --------------------------------------------------------------

struct FitArgs {
  std::string runs, scratch, transfer, out, plot_dir, data_unit = "utterances";
  double model_factor = 10.0;
};

int RunFit(const FitArgs& a) {
  if (a.runs.empty() == a.scratch.empty())
    throw std::invalid_argument("give exactly one of --runs or --scratch");
  if (!a.plot_dir.empty() && a.runs.empty())
    throw std::invalid_argument("--plot-dir needs --runs");
  FitReport report;
  std::vector<RunRecord> runs;
  if (!a.runs.empty()) {
    runs = ReadRunsCsv(a.runs);
    report = FitLaws(ObservationsFromRuns(runs, InitMode::kScratch),
                     ObservationsFromRuns(runs, InitMode::kPretrained), a.data_unit,
                     a.model_factor);
  } else {
    const auto transfer =
        a.transfer.empty() ? std::vector<ObservationPoint>{} : ReadObservationsCsv(a.transfer);
    report = FitLaws(ReadObservationsCsv(a.scratch), transfer, a.data_unit, a.model_factor);
  }
  const std::string text = FitReportToJson(report);
  if (a.out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream out(a.out, std::ios::trunc);
    if (!out) throw DataError("cannot write report '" + a.out + "'");
    out << text << '\n';
    const auto& s = report.scratch;
    std::printf("scratch:  d_c=%.6g alpha_d=%.6g (se %.3g) r2=%.4f\n", s.law.d_c,
                s.law.alpha_d, s.se_alpha_d, s.r_squared);
    if (report.transfer) {
      const auto& t = *report.transfer;
      std::printf("transfer: k=%.6g alpha=%.6g (se %.3g) beta=%.6g (se %.3g) r2=%.4f\n",
                  t.law.k, t.law.alpha, t.se_alpha, t.law.beta, t.se_beta, t.r_squared);
    }
  }
  // stdout carries the report itself when no --out file was given.
  std::fprintf(a.out.empty() ? stderr : stdout, "tradeoff: %s\n", TradeoffLine(report).c_str());
  if (!a.plot_dir.empty())
    for (const auto& p : EmitPlotData(runs, report, a.plot_dir))
      std::fprintf(stderr, "wrote %s\n", p.c_str());
  return kExitOk;
}

// --- predict ------------------------------------------------------------------

struct PredictArgs {
  std::string laws;
  bool published = false;
  double d = 0.0;
  std::optional<double> n;
};

int RunPredict(const PredictArgs& a) {
  if (a.laws.empty() == !a.published)
    throw std::invalid_argument("give exactly one of --laws or --published");
  if (!(a.d > 0.0)) throw std::invalid_argument("--d must be > 0");
  if (a.n && !(*a.n > 0.0)) throw std::invalid_argument("--n must be > 0");
  const FitReport report = a.published ? PublishedLawReport() : LoadFitReport(a.laws);
  const Prediction p = Predict(report, a.d, a.n);
  std::cout << PredictionToJson(p, a.d, a.n) << '\n';
  for (const auto& w : p.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return kExitOk;
}

// --- rescore ------------------------------------------------------------------

struct RescoreArgs {
  std::string model, nbest, out, scored_out;
  double weight = 1.0;
};

int RunRescore(const RescoreArgs& a) {
  const ScorerModel model = LoadCheckpoint(a.model);
  const InterpolationWeight w(a.weight);
  Corpus corpus = ReadCorpus(a.nbest);
  for (auto& list : corpus)
    for (auto& h : list.hyps) h.second_pass_score = Score(model, h.tokens);

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out, std::ios::trunc);
    if (!file) throw DataError("cannot write '" + a.out + "'");
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  std::vector<size_t> selection;
  for (const auto& list : corpus) {
    const size_t best = SelectBest(list, w);
    selection.push_back(best);
    const nlohmann::json j = {{"id", list.utterance_id},
                              {"index", best},
                              {"tokens", list.hyps[best].tokens},
                              {"score", Interpolate(list, w)[best]}};
    out << j.dump() << '\n';
  }
  if (!a.scored_out.empty()) WriteCorpus(corpus, a.scored_out);
  bool have_refs = !corpus.empty();
  for (const auto& list : corpus) have_refs = have_refs && !list.reference.empty();
  if (have_refs) {
    const WerReport wer = SelectionWer(corpus, selection);
    std::fprintf(stderr, "rescored WER %.4f (%lld errors / %lld words)\n", wer.rate(),
                 static_cast<long long>(wer.errors), static_cast<long long>(wer.ref_words));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"n-best rescoring scaling-law toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate synthetic train/dev/test n-best corpora");
  c_synth->add_option("--config", synth.config, "synth config (JSON)")->check(CLI::ExistingFile);
  c_synth->add_option("--out", synth.out_dir, "output directory")->required();
  c_synth->add_option("--seed", synth.seed, "override the config seed");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "fine-tune one scorer and report test WERs");
  c_train->add_option("--config", train.config, "run config (JSON)")->check(CLI::ExistingFile);
  c_train->add_option("--train", train.train, "training n-best JSONL (default: synthesize)");
  c_train->add_option("--dev", train.dev, "dev n-best JSONL");
  c_train->add_option("--test", train.test, "test n-best JSONL");
  c_train->add_option("--pretrained", train.pretrained, "pretrained checkpoint");
  c_train->add_option("--init", train.init, "scratch | pretrained");
  c_train->add_option("--seed", train.seed, "override the config seed");
  c_train->add_option("--out", train.out_dir, "output directory")->required();
  c_train->add_flag("--no-wall-time", train.no_wall_time, "write wall_time_s as 0");

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "run a data size x model size x init grid");
  c_sweep->add_option("--config", sweep.config, "sweep config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  c_sweep->add_option("--out", sweep.out_dir, "output directory")->required();
  c_sweep->add_option("--parallelism", sweep.parallelism, "concurrent cells");
  c_sweep->add_flag("--no-wall-time", sweep.no_wall_time, "write wall_time_s as 0");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit-scaling", "fit scratch and transfer scaling laws");
  c_fit->add_option("--runs", fit.runs, "runs table CSV");
  c_fit->add_option("--scratch", fit.scratch, "scratch observations CSV (d,n,wer_norm)");
  c_fit->add_option("--transfer", fit.transfer, "pretrained observations CSV (d,n,wer_norm)");
  c_fit->add_option("--out", fit.out, "report file (default: stdout)");
  c_fit->add_option("--plot-dir", fit.plot_dir, "write per-model plot CSVs here");
  c_fit->add_option("--data-unit", fit.data_unit, "label for the data axis");
  c_fit->add_option("--model-factor", fit.model_factor, "model factor for the trade-off line");

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "evaluate fitted laws");
  c_pred->add_option("--laws", pred.laws, "fit report / law file");
  c_pred->add_flag("--published", pred.published, "use the published constants");
  c_pred->add_option("--d", pred.d, "training data size")->required();
  c_pred->add_option("--n", pred.n, "model size (selects the transfer law)");

  RescoreArgs resc;
  auto* c_resc = app.add_subcommand("rescore", "rescore an n-best JSONL and emit the 1-best");
  c_resc->add_option("--model", resc.model, "scorer checkpoint")->required();
  c_resc->add_option("--nbest", resc.nbest, "n-best JSONL")->required();
  c_resc->add_option("--weight", resc.weight, "interpolation weight w");
  c_resc->add_option("--out", resc.out, "1-best JSONL (default: stdout)");
  c_resc->add_option("--scored-out", resc.scored_out, "n-best JSONL with second-pass scores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_synth->parsed()) return RunSynth(synth);
    if (c_train->parsed()) return RunTrain(train);
    if (c_sweep->parsed()) return RunSweepCommand(sweep);
    if (c_fit->parsed()) return RunFit(fit);
    if (c_pred->parsed()) return RunPredict(pred);
    if (c_resc->parsed()) return RunRescore(resc);
  } catch (const IdentifiabilityError& e) {
    std::fprintf(stderr, "identifiability error: %s\n", e.what());
    return kExitIdentifiability;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
