// core/src/experiment.cc

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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "nbscale/errors.h"
#include "nbscale/metrics.h"
#include "nbscale/rng.h"

namespace nbscale {

using nlohmann::json;
namespace fs = std::filesystem;

const char* InitModeName(InitMode mode) {
  return mode == InitMode::kScratch ? "scratch" : "pretrained";
}

InitMode ParseInitMode(const std::string& name) {
  if (name == "scratch") return InitMode::kScratch;
  if (name == "pretrained") return InitMode::kPretrained;
  throw std::invalid_argument("unknown init mode '" + name + "'");
}

std::vector<double> DefaultWeightGrid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 10.0);
  return grid;
}

std::vector<ScorerConfig> ToyModelShapes(int vocab_size, int max_len) {
  auto shape = [&](int hidden, int layers, int heads, int ffn) {
    ScorerConfig c;
    c.vocab_size = vocab_size;
    c.hidden = hidden;
    c.layers = layers;
    c.heads = heads;
    c.ffn_dim = ffn;
    c.max_len = max_len;
    return c;
  };
  return {shape(8, 2, 2, 16), shape(12, 2, 2, 24), shape(24, 3, 2, 48),
          shape(32, 4, 2, 96)};
}

ScorerModel PretrainModel(const ScorerConfig& scorer, const SynthConfig& synth,
                          const PretrainConfig& pretrain, uint64_t seed) {
  ScorerConfig c = scorer;
  c.seed = seed;
  ScorerModel model = InitModel(c);
  const auto corpus = PretrainingCorpus(synth, pretrain.corpus_sentences, seed);
  TrainConfig t = pretrain.train;
  t.seed = seed;
  return MlmPretrain(std::move(model), corpus, t, pretrain.mask_rate).model;
}

RunRecord RunExperiment(const Corpus& train, const Corpus& dev, const Corpus& test,
                        const RunOptions& options, const ScorerModel* pretrained,
                        RunDetails* details) {
  const auto start = std::chrono::steady_clock::now();
  if (options.w_grid.empty()) throw std::invalid_argument("RunExperiment: empty w grid");
  ScorerConfig cfg = options.scorer;
  cfg.seed = options.seed;
  ScorerModel model = pretrained ? *pretrained : InitModel(cfg);
  if (pretrained) {
    if (options.init != InitMode::kPretrained)
      throw std::invalid_argument("RunExperiment: pretrained model given for scratch run");
    ReinitHead(model, options.seed);
  } else if (options.init == InitMode::kPretrained) {
    throw std::invalid_argument("RunExperiment: pretrained run needs a pretrained model");
  }

  const auto enc_train = EncodeCorpus(model, train);
  const auto enc_dev = EncodeCorpus(model, dev);
  const auto enc_test = EncodeCorpus(model, test);
  TrainConfig t = options.train;
  t.seed = options.seed;
  FinetuneOptions fo;
  fo.dev_w_grid = options.w_grid;
  FinetuneResult ft = MwerFinetune(std::move(model), enc_train, enc_dev, t, fo);

  const double w = BestWeight(enc_dev, ScoreEncoded(ft.model, enc_dev), options.w_grid);
  const WerTriple test_wer = EvaluateEncoded(enc_test, ScoreEncoded(ft.model, enc_test), w);

  RunRecord r;
  r.d = static_cast<int64_t>(train.size());
  r.n = ft.model.NonEmbeddingParams();
  r.init = options.init;
  r.seed = options.seed;
  r.wer_1p = test_wer.first_pass.rate();
  r.wer_2p = test_wer.rescored.rate();
  r.wer_oracle = test_wer.oracle.rate();
  r.wer_norm = NormalizedWer(r.wer_2p, r.wer_1p, r.wer_oracle);
  r.epochs = ft.epochs_trained;
  r.weight = w;
  r.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (details) details->finetune = std::move(ft);
  return r;
}

uint64_t CellSeed(uint64_t sweep_seed, int64_t d, int64_t n, InitMode init,
                  uint64_t replicate) {
  return CombineSeeds({sweep_seed, static_cast<uint64_t>(d), static_cast<uint64_t>(n),
                       static_cast<uint64_t>(init), replicate});
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace {

void CheckKeys(const json& j, std::initializer_list<const char*> allowed,
               const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok)
      throw std::invalid_argument(std::string(what) + ": unknown field '" + key + "'");
  }
}

template <typename T>
void Get(const json& j, const char* key, T& field) {
  auto it = j.find(key);
  if (it != j.end()) field = it->get<T>();
}

json ToJson(const SynthConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"successors", c.successors},
          {"min_len", c.min_len},       {"max_len", c.max_len},
          {"train_size", c.train_size}, {"dev_size", c.dev_size},
          {"test_size", c.test_size},   {"nbest_depth", c.nbest_depth},
          {"p_sub", c.p_sub},           {"p_ins", c.p_ins},
          {"p_del", c.p_del},           {"score_slope", c.score_slope},
          {"score_noise", c.score_noise}, {"max_retries", c.max_retries},
          {"seed", c.seed}};
}

SynthConfig SynthFrom(const json& j) {
  CheckKeys(j, {"vocab_size", "successors", "min_len", "max_len", "train_size",
                "dev_size", "test_size", "nbest_depth", "p_sub", "p_ins", "p_del",
                "score_slope", "score_noise", "max_retries", "seed"},
            "synth config");
  SynthConfig c;
  Get(j, "vocab_size", c.vocab_size);
  Get(j, "successors", c.successors);
  Get(j, "min_len", c.min_len);
  Get(j, "max_len", c.max_len);
  Get(j, "train_size", c.train_size);
  Get(j, "dev_size", c.dev_size);
  Get(j, "test_size", c.test_size);
  Get(j, "nbest_depth", c.nbest_depth);
  Get(j, "p_sub", c.p_sub);
  Get(j, "p_ins", c.p_ins);
  Get(j, "p_del", c.p_del);
  Get(j, "score_slope", c.score_slope);
  Get(j, "score_noise", c.score_noise);
  Get(j, "max_retries", c.max_retries);
  Get(j, "seed", c.seed);
  c.Validate();
  return c;
}

json ToJson(const ScorerConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"hidden", c.hidden}, {"layers", c.layers},
          {"heads", c.heads},           {"ffn_dim", c.ffn_dim}, {"max_len", c.max_len},
          {"seed", c.seed}};
}

ScorerConfig ScorerFrom(const json& j) {
  CheckKeys(j, {"vocab_size", "hidden", "layers", "heads", "ffn_dim", "max_len", "seed"},
            "scorer config");
  ScorerConfig c;
  Get(j, "vocab_size", c.vocab_size);
  Get(j, "hidden", c.hidden);
  Get(j, "layers", c.layers);
  Get(j, "heads", c.heads);
  Get(j, "ffn_dim", c.ffn_dim);
  Get(j, "max_len", c.max_len);
  Get(j, "seed", c.seed);
  c.Validate();
  return c;
}

json ToJson(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed},
          {"lr_decay", c.lr_decay},
          {"lr_decay_every", c.lr_decay_every},
          {"min_epoch_lists", c.min_epoch_lists},
          {"mwer_on_interpolated", c.mwer_on_interpolated},
          {"freeze_embeddings", c.freeze_embeddings}};
}

TrainConfig TrainFrom(const json& j, TrainConfig c = {}) {
  CheckKeys(j, {"batch_size", "learning_rate", "max_epochs", "patience", "seed",
                "lr_decay", "lr_decay_every", "min_epoch_lists",
                "mwer_on_interpolated", "freeze_embeddings"},
            "train config");
  Get(j, "batch_size", c.batch_size);
  Get(j, "learning_rate", c.learning_rate);
  Get(j, "max_epochs", c.max_epochs);
  Get(j, "patience", c.patience);
  Get(j, "seed", c.seed);
  Get(j, "lr_decay", c.lr_decay);
  Get(j, "lr_decay_every", c.lr_decay_every);
  Get(j, "min_epoch_lists", c.min_epoch_lists);
  Get(j, "mwer_on_interpolated", c.mwer_on_interpolated);
  Get(j, "freeze_embeddings", c.freeze_embeddings);
  c.Validate();
  return c;
}

json ToJson(const PretrainConfig& c) {
  return {{"corpus_sentences", c.corpus_sentences},
          {"mask_rate", c.mask_rate},
          {"train", ToJson(c.train)}};
}

PretrainConfig PretrainFrom(const json& j) {
  CheckKeys(j, {"corpus_sentences", "mask_rate", "train"}, "pretrain config");
  PretrainConfig c;
  Get(j, "corpus_sentences", c.corpus_sentences);
  Get(j, "mask_rate", c.mask_rate);
  if (j.contains("train")) c.train = TrainFrom(j.at("train"), c.train);
  if (c.corpus_sentences < 1 || !(c.mask_rate > 0.0 && c.mask_rate < 1.0))
    throw std::invalid_argument("pretrain config: need corpus_sentences >= 1 and 0 < mask_rate < 1");
  return c;
}

json ToJson(const SweepConfig& c) {
  json models = json::array();
  for (const auto& m : c.models) models.push_back(ToJson(m));
  json inits = json::array();
  for (auto i : c.inits) inits.push_back(InitModeName(i));
  return {{"synth", ToJson(c.synth)},     {"d_values", c.d_values},
          {"models", models},             {"inits", inits},
          {"replicates", c.replicates},   {"train", ToJson(c.train)},
          {"pretrain", ToJson(c.pretrain)}, {"w_grid", c.w_grid},
          {"seed", c.seed},               {"parallelism", c.parallelism},
          {"record_wall_time", c.record_wall_time}};
}

json ParseJson(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

template <typename F>
auto Wrap(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

}  // namespace

void SweepConfig::Validate() const {
  synth.Validate();
  train.Validate();
  if (d_values.empty() || models.empty() || inits.empty() || replicates.empty() ||
      w_grid.empty())
    throw std::invalid_argument("sweep config: all grids must be non-empty");
  for (auto d : d_values)
    if (d < 1) throw std::invalid_argument("sweep config: d values must be >= 1");
  for (const auto& m : models) {
    m.Validate();
    if (m.vocab_size != synth.vocab_size)
      throw std::invalid_argument("sweep config: model vocab_size must match synth");
  }
  for (double w : w_grid) InterpolationWeight{w};
  if (parallelism < 1) throw std::invalid_argument("sweep config: parallelism must be >= 1");
}

std::string SweepConfigToJson(const SweepConfig& c) { return ToJson(c).dump(2); }

SweepConfig SweepConfigFromJson(const std::string& text) {
  return Wrap([&] {
    const json j = ParseJson(text, "sweep config");
    CheckKeys(j, {"synth", "d_values", "models", "inits", "replicates", "train",
                  "pretrain", "w_grid", "seed", "parallelism", "record_wall_time"},
              "sweep config");
    SweepConfig c;
    if (j.contains("synth")) c.synth = SynthFrom(j.at("synth"));
    Get(j, "d_values", c.d_values);
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) c.models.push_back(ScorerFrom(m));
    }
    if (j.contains("inits")) {
      c.inits.clear();
      for (const auto& i : j.at("inits")) c.inits.push_back(ParseInitMode(i.get<std::string>()));
    }
    Get(j, "replicates", c.replicates);
    if (j.contains("train")) c.train = TrainFrom(j.at("train"));
    if (j.contains("pretrain")) c.pretrain = PretrainFrom(j.at("pretrain"));
    Get(j, "w_grid", c.w_grid);
    Get(j, "seed", c.seed);
    Get(j, "parallelism", c.parallelism);
    Get(j, "record_wall_time", c.record_wall_time);
    c.Validate();
    return c;
  });
}

namespace {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SweepConfig LoadSweepConfig(const std::string& path) {
  return SweepConfigFromJson(ReadFile(path));
}

void RunConfig::Validate() const {
  synth.Validate();
  scorer.Validate();
  train.Validate();
  if (w_grid.empty()) throw std::invalid_argument("run config: empty w grid");
  for (double w : w_grid) InterpolationWeight{w};
  if (d < 0) throw std::invalid_argument("run config: d must be >= 0");
}

std::string RunConfigToJson(const RunConfig& c) {
  const json j = {{"synth", ToJson(c.synth)},     {"scorer", ToJson(c.scorer)},
                  {"train", ToJson(c.train)},     {"pretrain", ToJson(c.pretrain)},
                  {"init", InitModeName(c.init)}, {"w_grid", c.w_grid},
                  {"seed", c.seed},               {"d", c.d}};
  return j.dump(2);
}

RunConfig RunConfigFromJson(const std::string& text) {
  return Wrap([&] {
    const json j = ParseJson(text, "run config");
    CheckKeys(j, {"synth", "scorer", "train", "pretrain", "init", "w_grid", "seed", "d"},
              "run config");
    RunConfig c;
    if (j.contains("synth")) c.synth = SynthFrom(j.at("synth"));
    if (j.contains("scorer")) c.scorer = ScorerFrom(j.at("scorer"));
    if (j.contains("train")) c.train = TrainFrom(j.at("train"));
    if (j.contains("pretrain")) c.pretrain = PretrainFrom(j.at("pretrain"));
    if (j.contains("init")) c.init = ParseInitMode(j.at("init").get<std::string>());
    Get(j, "w_grid", c.w_grid);
    Get(j, "seed", c.seed);
    Get(j, "d", c.d);
    c.Validate();
    return c;
  });
}

RunConfig LoadRunConfig(const std::string& path) { return RunConfigFromJson(ReadFile(path)); }

std::string SynthConfigToJson(const SynthConfig& c) { return ToJson(c).dump(2); }
SynthConfig SynthConfigFromJson(const std::string& text) {
  return Wrap([&] { return SynthFrom(ParseJson(text, "synth config")); });
}
std::string ScorerConfigToJson(const ScorerConfig& c) { return ToJson(c).dump(2); }
ScorerConfig ScorerConfigFromJson(const std::string& text) {
  return Wrap([&] { return ScorerFrom(ParseJson(text, "scorer config")); });
}
std::string TrainConfigToJson(const TrainConfig& c) { return ToJson(c).dump(2); }
TrainConfig TrainConfigFromJson(const std::string& text) {
  return Wrap([&] { return TrainFrom(ParseJson(text, "train config")); });
}

// ---------------------------------------------------------------------------
// Runs table

namespace {

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr const char* kRunsHeader =
    "d,n,init,seed,wer_1p,wer_2p,wer_oracle,wer_norm,epochs,wall_time_s";

json RecordToJson(const RunRecord& r) {
  return {{"d", r.d},
          {"n", r.n},
          {"init", InitModeName(r.init)},
          {"seed", r.seed},
          {"wer_1p", r.wer_1p},
          {"wer_2p", r.wer_2p},
          {"wer_oracle", r.wer_oracle},
          {"wer_norm", r.wer_norm},
          {"epochs", r.epochs},
          {"wall_time_s", r.wall_time_s},
          {"weight", r.weight}};
}

RunRecord RecordFromJson(const json& j) {
  RunRecord r;
  r.d = j.at("d").get<int64_t>();
  r.n = j.at("n").get<int64_t>();
  r.init = ParseInitMode(j.at("init").get<std::string>());
  r.seed = j.at("seed").get<uint64_t>();
  r.wer_1p = j.at("wer_1p").get<double>();
  r.wer_2p = j.at("wer_2p").get<double>();
  r.wer_oracle = j.at("wer_oracle").get<double>();
  r.wer_norm = j.at("wer_norm").get<double>();
  r.epochs = j.at("epochs").get<int>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  r.weight = j.value("weight", 0.0);
  return r;
}

}  // namespace

void WriteRunsCsv(const std::vector<RunRecord>& runs, std::ostream& out) {
  out << kRunsHeader << '\n';
  for (const auto& r : runs) {
    out << r.d << ',' << r.n << ',' << InitModeName(r.init) << ',' << r.seed << ','
        << FormatDouble(r.wer_1p) << ',' << FormatDouble(r.wer_2p) << ','
        << FormatDouble(r.wer_oracle) << ',' << FormatDouble(r.wer_norm) << ','
        << r.epochs << ',' << FormatDouble(r.wall_time_s) << '\n';
  }
}

void WriteRunsCsv(const std::vector<RunRecord>& runs, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write runs table '" + path + "'");
  WriteRunsCsv(runs, out);
}

std::vector<RunRecord> ReadRunsCsv(std::istream& in) {
  std::string line;
  size_t line_no = 1;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRunsHeader)
    throw DataError("runs table: unexpected header '" + line + "'");
  std::vector<RunRecord> runs;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10)
      throw DataError("runs table line " + std::to_string(line_no) + ": expected 10 columns");
    try {
      RunRecord r;
      size_t pos = 0;
      auto whole = [&](const std::string& s) {
        if (pos != s.size()) throw std::invalid_argument("trailing characters in '" + s + "'");
      };
      r.d = std::stoll(f[0], &pos); whole(f[0]);
      r.n = std::stoll(f[1], &pos); whole(f[1]);
      r.init = ParseInitMode(f[2]);
      r.seed = std::stoull(f[3], &pos); whole(f[3]);
      r.wer_1p = std::stod(f[4], &pos); whole(f[4]);
      r.wer_2p = std::stod(f[5], &pos); whole(f[5]);
      r.wer_oracle = std::stod(f[6], &pos); whole(f[6]);
      r.wer_norm = std::stod(f[7], &pos); whole(f[7]);
      r.epochs = std::stoi(f[8], &pos); whole(f[8]);
      r.wall_time_s = std::stod(f[9], &pos); whole(f[9]);
      runs.push_back(r);
    } catch (const std::exception& e) {
      throw DataError("runs table line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return runs;
}

std::vector<RunRecord> ReadRunsCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open runs table '" + path + "'");
  return ReadRunsCsv(in);
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

struct Cell {
  size_t model_index;
  int64_t d;
  InitMode init;
  uint64_t replicate;
  uint64_t seed;
  std::string key;
};

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Everything that changes a cell's result apart from its grid coordinates.
uint64_t Fingerprint(const SweepConfig& c) {
  const json j = {{"synth", ToJson(c.synth)},
                  {"train", ToJson(c.train)},
                  {"pretrain", ToJson(c.pretrain)},
                  {"w_grid", c.w_grid},
                  {"seed", c.seed},
                  {"d_max", *std::max_element(c.d_values.begin(), c.d_values.end())}};
  return HashString(j.dump());
}

uint64_t ShapeHash(const ScorerConfig& m) {
  ScorerConfig shape = m;
  shape.seed = 0;
  return HashString(ToJson(shape).dump());
}

std::map<std::string, RunRecord> LoadCompleted(const fs::path& log_path) {
  std::map<std::string, RunRecord> done;
  std::ifstream in(log_path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.at("status").get<std::string>() == "ok")
        done[j.at("key").get<std::string>()] = RecordFromJson(j.at("record"));
    } catch (const std::exception& e) {
      // A crash mid-write can leave a partial final line.
      continue;
    }
  }
  return done;
}

}  // namespace

std::vector<RunRecord> Sweep(const SweepConfig& config, const std::string& out_dir,
                             SweepProgress* progress,
                             const std::function<void(const std::string&)>& log) {
  config.Validate();
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  {
    std::ofstream cfg_out(dir / "sweep_config.json", std::ios::trunc);
    cfg_out << SweepConfigToJson(config) << '\n';
  }

  const uint64_t fingerprint = Fingerprint(config);
  std::vector<Cell> cells;
  std::vector<int64_t> model_n;
  for (const auto& m : config.models) model_n.push_back(m.NonEmbeddingParams());
  for (size_t mi = 0; mi < config.models.size(); ++mi)
    for (int64_t d : config.d_values)
      for (InitMode init : config.inits)
        for (uint64_t rep : config.replicates) {
          Cell c{mi, d, init, rep, CellSeed(config.seed, d, model_n[mi], init, rep), ""};
          c.key = Hex(CombineSeeds({fingerprint, ShapeHash(config.models[mi]), c.seed}));
          cells.push_back(c);
        }

  const fs::path log_path = dir / "runs.jsonl";
  std::map<std::string, RunRecord> done = LoadCompleted(log_path);
  std::vector<size_t> pending;
  for (size_t i = 0; i < cells.size(); ++i)
    if (!done.count(cells[i].key)) pending.push_back(i);
  SweepProgress prog;
  prog.total = cells.size();
  prog.skipped = cells.size() - pending.size();
  if (prog.skipped) say("resuming: " + std::to_string(prog.skipped) + " cells already done");

  if (!pending.empty()) {
    SynthConfig synth = config.synth;
    synth.train_size =
        static_cast<int>(*std::max_element(config.d_values.begin(), config.d_values.end()));
    const SynthCorpora data = SynthCorpus(synth);

    // One pretrained checkpoint per model shape, shared by every cell.
    std::map<size_t, ScorerModel> pretrained;
    for (size_t pi : pending) {
      const Cell& c = cells[pi];
      if (c.init != InitMode::kPretrained || pretrained.count(c.model_index)) continue;
      const auto& m = config.models[c.model_index];
      const uint64_t pseed =
          CombineSeeds({config.seed, static_cast<uint64_t>(model_n[c.model_index]),
                        HashString("pretrain")});
      const fs::path ckpt =
          dir / ("pretrained_" + Hex(CombineSeeds({fingerprint, ShapeHash(m)})) + ".ckpt");
      if (fs::exists(ckpt)) {
        pretrained.emplace(c.model_index, LoadCheckpoint(ckpt.string()));
      } else {
        say("pretraining model n=" + std::to_string(model_n[c.model_index]));
        ScorerModel model = PretrainModel(m, synth, config.pretrain, pseed);
        SaveCheckpoint(model, ckpt.string());
        pretrained.emplace(c.model_index, std::move(model));
      }
    }

    std::mutex mu;
    std::ofstream log_out(log_path, std::ios::app);
    if (!log_out) throw DataError("cannot append to run log '" + log_path.string() + "'");
    auto run_cell = [&](size_t pi) {
      const Cell& c = cells[pi];
      const Corpus train(data.train.begin(), data.train.begin() + c.d);
      RunOptions opt;
      opt.scorer = config.models[c.model_index];
      opt.train = config.train;
      opt.init = c.init;
      opt.w_grid = config.w_grid;
      opt.seed = c.seed;
      json entry = {{"key", c.key}};
      std::string msg;
      try {
        const ScorerModel* init = c.init == InitMode::kPretrained
                                      ? &pretrained.at(c.model_index)
                                      : nullptr;
        RunRecord r = RunExperiment(train, data.dev, data.test, opt, init);
        r.seed = c.replicate;
        if (!config.record_wall_time) r.wall_time_s = 0.0;
        entry["status"] = "ok";
        entry["record"] = RecordToJson(r);
        msg = "cell d=" + std::to_string(c.d) + " n=" + std::to_string(r.n) + " " +
              InitModeName(c.init) + " rep=" + std::to_string(c.replicate) +
              " wer_norm=" + FormatDouble(r.wer_norm);
        std::lock_guard<std::mutex> lock(mu);
        done[c.key] = r;
        ++prog.completed;
      } catch (const std::exception& e) {
        entry["status"] = "failed";
        entry["error"] = e.what();
        entry["d"] = c.d;
        entry["n"] = model_n[c.model_index];
        entry["init"] = InitModeName(c.init);
        entry["replicate"] = c.replicate;
        msg = std::string("cell failed: ") + e.what();
        std::lock_guard<std::mutex> lock(mu);
        ++prog.failed;
      }
      std::lock_guard<std::mutex> lock(mu);
      log_out << entry.dump() << '\n';
      log_out.flush();
      say(msg);
    };

    if (config.parallelism <= 1) {
      for (size_t pi : pending) run_cell(pi);
    } else {
      std::atomic<size_t> next{0};
      std::vector<std::thread> workers;
      const size_t nthreads = std::min<size_t>(config.parallelism, pending.size());
      for (size_t t = 0; t < nthreads; ++t)
        workers.emplace_back([&] {
          for (size_t i = next++; i < pending.size(); i = next++) run_cell(pending[i]);
        });
      for (auto& w : workers) w.join();
    }
  }

  std::vector<RunRecord> table;
  for (const auto& c : cells) {
    auto it = done.find(c.key);
    if (it != done.end()) table.push_back(it->second);
  }
  WriteRunsCsv(table, (dir / "runs.csv").string());
  if (progress) *progress = prog;
  return table;
}

}  // namespace nbscale
