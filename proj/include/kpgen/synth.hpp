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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpgen/corpus.hpp"

namespace kpgen {

// Synthetic corpus: each document embeds a few two-token topic phrases into
// templated title/abstract text; gold keyphrases are those phrases plus
// optional absent synonyms drawn from token pools that never occur in any
// source text. Keyphrases are distinct by construction, so the ground-truth
// duplicate rate is exactly zero.
struct SynthConfig {
  std::size_t topics = 8;
  std::size_t phrases_per_topic = 8;
  std::size_t min_present = 2;
  std::size_t max_present = 6;
  std::size_t max_absent = 2;
  double absent_prob = 0.5;
  std::size_t n_train = 200;
  std::size_t n_valid = 50;
  std::size_t n_test = 50;
  std::uint64_t seed = 7;

  // Expected keyphrases per document; the generator's statistics oracle.
  double expected_mean_kps() const {
    return (static_cast<double>(min_present) +
            static_cast<double>(max_present)) /
               2.0 +
           static_cast<double>(max_absent) * absent_prob;
  }

  void validate() const;
};

struct SynthSplits {
  std::vector<Example> train;
  std::vector<Example> valid;
  std::vector<Example> test;
};

// Deterministic for a fixed config (single seeded stream).
SynthSplits synth_corpus(const SynthConfig& config);

// The two-token phrase with the given global index.
std::vector<std::string> synth_phrase(std::size_t index);

// Its absent-synonym counterpart, built from the disjoint pools.
std::vector<std::string> synth_synonym(std::size_t index);

// Writes train.jsonl, valid.jsonl, test.jsonl under dir.
void write_synth_corpus(const SynthConfig& config, const std::string& dir);

}  // namespace kpgen
