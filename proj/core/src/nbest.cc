// core/src/nbest.cc

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

#include "nbscale/nbest.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "nbscale/errors.h"

namespace nbscale {

using nlohmann::json;

InterpolationWeight::InterpolationWeight(double w) : w_(w) {
  if (!std::isfinite(w) || w < 0.0)
    throw std::invalid_argument("interpolation weight must be finite and >= 0");
}

std::vector<double> Interpolate(const NBestList& list, InterpolationWeight w) {
  std::vector<double> scores;
  scores.reserve(list.hyps.size());
  for (const auto& hyp : list.hyps) {
    if (!hyp.second_pass_score)
      throw DataError("utterance '" + list.utterance_id +
                      "': hypothesis missing second-pass score");
    scores.push_back(hyp.first_pass_score + w.value() * *hyp.second_pass_score);
  }
  return scores;
}

size_t SelectBest(const NBestList& list, InterpolationWeight w) {
  if (list.hyps.empty())
    throw DataError("utterance '" + list.utterance_id + "': empty n-best list");
  const std::vector<double> scores = Interpolate(list, w);
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i)
    if (scores[i] < scores[best]) best = i;
  return best;
}

WerReport RescoredWer(const Corpus& corpus, InterpolationWeight w) {
  std::vector<size_t> selection;
  selection.reserve(corpus.size());
  for (const auto& list : corpus) selection.push_back(SelectBest(list, w));
  return SelectionWer(corpus, selection);
}

NBestList AttachEditDistances(NBestList list) {
  for (auto& hyp : list.hyps)
    hyp.edit_dist = static_cast<int>(EditDistance(list.reference, hyp.tokens));
  return list;
}

void AttachEditDistances(Corpus& corpus) {
  for (auto& list : corpus) list = AttachEditDistances(std::move(list));
}

namespace {

TokenSeq ParseTokens(const json& value, const char* field) {
  if (!value.is_array())
    throw std::runtime_error(std::string("field '") + field +
                             "' must be an array of strings");
  TokenSeq tokens;
  tokens.reserve(value.size());
  for (const auto& tok : value) {
    if (!tok.is_string())
      throw std::runtime_error(std::string("field '") + field +
                               "' must contain only strings");
    tokens.push_back(tok.get<std::string>());
  }
  return tokens;
}

double ParseScore(const json& value, const char* field) {
  if (!value.is_number())
    throw std::runtime_error(std::string("field '") + field +
                             "' must be a number");
  const double v = value.get<double>();
  if (!std::isfinite(v))
    throw std::runtime_error(std::string("field '") + field +
                             "' must be finite");
  return v;
}

const json& Require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end())
    throw std::runtime_error(std::string("missing field '") + field + "'");
  return *it;
}

NBestList ParseRecord(const std::string& line) {
  const json obj = json::parse(line);
  if (!obj.is_object()) throw std::runtime_error("record is not an object");
  NBestList list;
  const json& id = Require(obj, "id");
  if (!id.is_string()) throw std::runtime_error("field 'id' must be a string");
  list.utterance_id = id.get<std::string>();
  list.reference = ParseTokens(Require(obj, "ref"), "ref");
  const json& hyps = Require(obj, "hyps");
  if (!hyps.is_array()) throw std::runtime_error("field 'hyps' must be an array");
  for (const auto& h : hyps) {
    if (!h.is_object()) throw std::runtime_error("hypothesis is not an object");
    Hypothesis hyp;
    hyp.tokens = ParseTokens(Require(h, "tokens"), "tokens");
    hyp.first_pass_score = ParseScore(Require(h, "fp"), "fp");
    auto sp = h.find("sp");
    if (sp != h.end() && !sp->is_null())
      hyp.second_pass_score = ParseScore(*sp, "sp");
    list.hyps.push_back(std::move(hyp));
  }
  return list;
}

}  // namespace

Corpus ReadCorpus(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    NBestList list;
    try {
      list = ParseRecord(line);
    } catch (const std::exception& e) {
      throw DataError("n-best corpus line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    if (!ids.insert(list.utterance_id).second)
      throw DataError("n-best corpus line " + std::to_string(line_no) +
                      ": duplicate utterance id '" + list.utterance_id + "'");
    corpus.push_back(std::move(list));
  }
  return corpus;
}

Corpus ReadCorpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open n-best corpus '" + path + "'");
  return ReadCorpus(in);
}

void WriteCorpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& list : corpus) {
    json hyps = json::array();
    for (const auto& hyp : list.hyps) {
      json h;
      h["tokens"] = hyp.tokens;
      h["fp"] = hyp.first_pass_score;
      h["sp"] = hyp.second_pass_score ? json(*hyp.second_pass_score)
                                      : json(nullptr);
      hyps.push_back(std::move(h));
    }
    json obj;
    obj["id"] = list.utterance_id;
    obj["ref"] = list.reference;
    obj["hyps"] = std::move(hyps);
    out << obj.dump() << '\n';
  }
}

void WriteCorpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write n-best corpus '" + path + "'");
  WriteCorpus(corpus, out);
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace nbscale
