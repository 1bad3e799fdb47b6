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

#include "kpgen/synth.hpp"

#include <filesystem>
#include <numeric>

#include "kpgen/error.hpp"
#include "kpgen/rng.hpp"

namespace kpgen {

namespace {

// Phrase pools. Modifier and head words recur across phrases so documents
// share surface tokens; the absent pools are disjoint from every other pool
// so synonyms are guaranteed never to occur in a source text.
const std::vector<std::string> kModifiers = {
    "adaptive",  "neural",    "sparse",   "robust", "latent",
    "convex",    "spectral",  "bayesian", "greedy", "dynamic",
    "stochastic", "recursive", "hybrid",   "online", "parallel",
    "relational", "temporal",  "causal"};

const std::vector<std::string> kHeads = {
    "network",  "inference",    "matching", "retrieval", "clustering",
    "parsing",  "ranking",      "alignment", "segmentation", "coding",
    "embedding", "regression",  "sampling",  "indexing"};

const std::vector<std::string> kAbsentModifiers = {
    "calibrated", "federated", "amortized", "modular", "unified",
    "staged",     "fused",     "gated",     "tiered",  "pruned",
    "mirrored",   "anchored",  "blended",   "chained", "layered",
    "nested"};

const std::vector<std::string> kAbsentHeads = {
    "synthesis", "weighting", "routing",  "bundling", "grouping",
    "screening", "merging",   "tracking", "chunking", "scoring",
    "linking",   "folding",   "sketching", "probing",  "stacking",
    "caching"};

std::vector<std::string> split_words(const char* s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char* p = s; *p; ++p) {
    if (*p == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(*p);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void append_words(std::vector<std::string>& out, const char* words) {
  for (std::string& w : split_words(words)) out.push_back(std::move(w));
}

void append_phrase(std::vector<std::string>& out,
                   const std::vector<std::string>& phrase) {
  out.insert(out.end(), phrase.begin(), phrase.end());
}

Example make_doc(const SynthConfig& cfg, Rng& rng) {
  std::size_t topic = rng.uniform_int(cfg.topics);
  std::size_t n_present =
      cfg.min_present + rng.uniform_int(cfg.max_present - cfg.min_present + 1);
  std::vector<std::size_t> local(cfg.phrases_per_topic);
  std::iota(local.begin(), local.end(), 0);
  rng.shuffle(local);

  std::vector<std::size_t> chosen;
  chosen.reserve(n_present);
  for (std::size_t j = 0; j < n_present; ++j)
    chosen.push_back(topic * cfg.phrases_per_topic + local[j]);

  std::vector<std::vector<std::string>> phrases;
  phrases.reserve(n_present);
  for (std::size_t idx : chosen) phrases.push_back(synth_phrase(idx));

  Example ex;
  append_phrase(ex.title, phrases[0]);
  if (n_present > 1) {
    append_words(ex.title, "for");
    append_phrase(ex.title, phrases[1]);
  }

  append_words(ex.abstract, "this paper studies");
  append_phrase(ex.abstract, phrases[0]);
  append_words(ex.abstract, "in practical settings");
  for (std::size_t i = 0; i < n_present; ++i) {
    switch (i % 4) {
      case 0:
        append_words(ex.abstract, "we propose");
        append_phrase(ex.abstract, phrases[i]);
        append_words(ex.abstract, "for large scale problems");
        break;
      case 1:
        append_words(ex.abstract, "our method improves");
        append_phrase(ex.abstract, phrases[i]);
        append_words(ex.abstract, "on");
        ex.abstract.push_back(
            std::to_string(2 + rng.uniform_int(std::uint64_t(30))));
        append_words(ex.abstract, "benchmarks");
        break;
      case 2:
        append_words(ex.abstract, "experiments with");
        append_phrase(ex.abstract, phrases[i]);
        append_words(ex.abstract, "demonstrate consistent gains");
        break;
      default:
        append_words(ex.abstract, "results show that");
        append_phrase(ex.abstract, phrases[i]);
        append_words(ex.abstract, "outperforms strong baselines");
        break;
    }
  }

  // Title/abstract text is already normalized; re-tokenizing digit tokens
  // happens at read time. Keyphrases list present phrases in source order
  // (construction order) and then the absent synonyms.
  for (std::size_t i = 0; i < n_present; ++i)
    ex.keyphrases.push_back(phrases[i]);
  for (std::size_t s = 0; s < cfg.max_absent; ++s)
    if (rng.bernoulli(cfg.absent_prob))
      ex.keyphrases.push_back(synth_synonym(chosen[s]));
  return ex;
}

}  // namespace

void SynthConfig::validate() const {
  if (topics == 0 || phrases_per_topic == 0)
    throw ConfigError("synth: topics and phrases_per_topic must be positive");
  if (min_present == 0 || max_present < min_present)
    throw ConfigError("synth: need 1 <= min_present <= max_present");
  if (max_present > phrases_per_topic)
    throw ConfigError("synth: max_present exceeds phrases_per_topic");
  if (max_absent > min_present)
    throw ConfigError(
        "synth: max_absent exceeds min_present; synonym slots would starve");
  if (absent_prob < 0.0 || absent_prob > 1.0)
    throw ConfigError("synth: absent_prob must lie in [0, 1]");
  if (n_train == 0 || n_valid == 0 || n_test == 0)
    throw ConfigError("synth: split sizes must be positive");
  if (topics * phrases_per_topic > kModifiers.size() * kHeads.size())
    throw ConfigError("synth: phrase pool exhausted; reduce topics");
}

std::vector<std::string> synth_phrase(std::size_t index) {
  return {kModifiers[index % kModifiers.size()],
          kHeads[(index / kModifiers.size()) % kHeads.size()]};
}

std::vector<std::string> synth_synonym(std::size_t index) {
  return {kAbsentModifiers[index % kAbsentModifiers.size()],
          kAbsentHeads[(index / kAbsentModifiers.size()) %
                       kAbsentHeads.size()]};
}

SynthSplits synth_corpus(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SynthSplits splits;
  for (std::size_t i = 0; i < config.n_train; ++i)
    splits.train.push_back(make_doc(config, rng));
  for (std::size_t i = 0; i < config.n_valid; ++i)
    splits.valid.push_back(make_doc(config, rng));
  for (std::size_t i = 0; i < config.n_test; ++i)
    splits.test.push_back(make_doc(config, rng));
  return splits;
}

void write_synth_corpus(const SynthConfig& config, const std::string& dir) {
  SynthSplits splits = synth_corpus(config);
  std::filesystem::create_directories(dir);
  write_examples_jsonl(dir + "/train.jsonl", splits.train);
  write_examples_jsonl(dir + "/valid.jsonl", splits.valid);
  write_examples_jsonl(dir + "/test.jsonl", splits.test);
}

}  // namespace kpgen
