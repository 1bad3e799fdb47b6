// Copyright 2026 The kpgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied. See the License for the specific language governing
// permissions and limitations under the License.

#include "kpgen/decode.hpp"

#include <fstream>
#include <string>

#include <json.hpp>

#include "kpgen/error.hpp"

namespace kpgen {

void write_predictions_jsonl(const std::string& path, const std::vector<Prediction>& preds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (const Prediction& p : preds) {
    nlohmann::json j;
    j["keyphrases"] = p.keyphrases;
    j["raw"] = p.raw;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

std::vector<PredictionRecord> read_predictions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("keyphrases") || !j["keyphrases"].is_array() ||
        !j.contains("raw") || !j["raw"].is_string())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected object with array keyphrases and string raw");
    PredictionRecord rec;
    for (const auto& kp : j["keyphrases"]) {
      if (!kp.is_array())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": each keyphrase must be an array of tokens");
      std::vector<std::string> toks;
      for (const auto& tok : kp) {
        if (!tok.is_string())
          throw DataError(path + ":" + std::to_string(lineno) + ": tokens must be strings");
        toks.push_back(tok.get<std::string>());
      }
      if (toks.empty())
        throw DataError(path + ":" + std::to_string(lineno) + ": empty keyphrase");
      rec.keyphrases.push_back(std::move(toks));
    }
    rec.raw = j["raw"].get<std::string>();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace kpgen
