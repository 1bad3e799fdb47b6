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
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "kpgen/error.hpp"
#include "kpgen/run_config.hpp"

namespace kpgen {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const char* where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw ConfigError("unknown key `" + key + "` in " + where);
    }
  }
}

json synth_to_json(const SynthConfig& s) {
  return json{{"topics", s.topics},
              {"phrases_per_topic", s.phrases_per_topic},
              {"min_present", s.min_present},
              {"max_present", s.max_present},
              {"max_absent", s.max_absent},
              {"absent_prob", s.absent_prob},
              {"n_train", s.n_train},
              {"n_valid", s.n_valid},
              {"n_test", s.n_test},
              {"seed", s.seed}};
}

SynthConfig synth_from_json(const json& j) {
  reject_unknown(j,
                 {"topics", "phrases_per_topic", "min_present", "max_present",
                  "max_absent", "absent_prob", "n_train", "n_valid", "n_test",
                  "seed"},
                 "synth config");
  SynthConfig s;
  s.topics = j.value("topics", s.topics);
  s.phrases_per_topic = j.value("phrases_per_topic", s.phrases_per_topic);
  s.min_present = j.value("min_present", s.min_present);
  s.max_present = j.value("max_present", s.max_present);
  s.max_absent = j.value("max_absent", s.max_absent);
  s.absent_prob = j.value("absent_prob", s.absent_prob);
  s.n_train = j.value("n_train", s.n_train);
  s.n_valid = j.value("n_valid", s.n_valid);
  s.n_test = j.value("n_test", s.n_test);
  s.seed = j.value("seed", s.seed);
  return s;
}

json metrics_to_json(const MetricsOptions& m) {
  return json{{"embedding_path", m.embedding_path}};
}

MetricsOptions metrics_from_json(const json& j) {
  reject_unknown(j, {"embedding_path"}, "metrics config");
  MetricsOptions m;
  m.embedding_path = j.value("embedding_path", m.embedding_path);
  return m;
}

// One `key.path=value` assignment onto the raw document. Intermediate
// objects are created as needed; crossing an existing non-object is an
// error. The value parses as JSON when possible (numbers, booleans), else
// it is taken as a string.
void apply_override(json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value: " + assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }

  json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key =
        path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) {
      throw ConfigError("override path has an empty segment: " + assignment);
    }
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    json& next = (*cur)[key];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) {
      throw ConfigError("override path crosses a non-object value: " + assignment);
    }
    cur = &next;
    start = dot + 1;
  }
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
  const json j{{"synth", synth_to_json(cfg.synth)},
               {"train", json::parse(train_config_to_json(cfg.train))},
               {"metrics", metrics_to_json(cfg.metrics)}};
  return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"synth", "train", "metrics"}, "run config");

  RunConfig cfg;
  try {
    if (j.contains("synth")) cfg.synth = synth_from_json(j.at("synth"));
    if (j.contains("metrics")) cfg.metrics = metrics_from_json(j.at("metrics"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  if (j.contains("train")) cfg.train = train_config_from_json(j.at("train").dump());
  return cfg;
}

RunConfig parse_run_config(const std::string& text,
                           const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const std::string& assignment : overrides) apply_override(doc, assignment);
  return run_config_from_json(doc.dump());
}

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), overrides);
}

}  // namespace kpgen
