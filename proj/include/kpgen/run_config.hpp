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

#ifndef KPGEN_RUN_CONFIG_HPP_
#define KPGEN_RUN_CONFIG_HPP_

#include <string>
#include <vector>

#include "kpgen/synth.hpp"
#include "kpgen/trainer.hpp"

namespace kpgen {

struct MetricsOptions {
  // Word-vector text file for embedding similarity; empty selects the
  // deterministic hashed one-hot fallback.
  std::string embedding_path;
};

// One JSON document configuring a whole run: corpus generation, training
// (model, loss, optimizer nested inside), and metric options. Every command
// reads the sections it needs; semantic validation happens where the values
// are used.
struct RunConfig {
  SynthConfig synth;
  TrainConfig train;
  MetricsOptions metrics;
};

std::string run_config_to_json(const RunConfig& cfg);

// Strict parse: unknown keys at any level, malformed documents, and wrongly
// typed values are ConfigErrors.
RunConfig run_config_from_json(const std::string& text);

// Parses text after applying `key.path=value` assignments onto the raw
// document (values parse as JSON scalars when possible, else as strings).
RunConfig parse_run_config(const std::string& text,
                           const std::vector<std::string>& overrides);

// Reads the file (DataError when unreadable), then parses as above.
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides);

}  // namespace kpgen

#endif  // KPGEN_RUN_CONFIG_HPP_
