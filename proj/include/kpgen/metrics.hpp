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

#ifndef KPGEN_METRICS_HPP_
#define KPGEN_METRICS_HPP_

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "kpgen/corpus.hpp"
#include "kpgen/tensor.hpp"

namespace kpgen {

// A record's keyphrases: an ordered list of surface token lists.
using KeyphraseList = std::vector<std::vector<std::string>>;

struct QualityScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Precision/recall/F1 at M, where M counts the deduplicated stemmed
// predictions. Both sides are Porter-stemmed token-wise and deduplicated;
// a match is exact stemmed-sequence equality. Empty predictions score 0.
QualityScores quality_at_m(const KeyphraseList& predicted, const KeyphraseList& gold);

// (1 - unique / total) * 100 over exact token sequences; empty list -> 0.
double dup_kp_pct(const KeyphraseList& kps);

// Same formula over tokens pooled across keyphrases with multiplicity.
double dup_token_pct(const KeyphraseList& kps);

// Mean over keyphrases of BLEU(candidate i, all others as references),
// times 100. Fixed configuration: n-gram orders up to min(4, candidate
// length), uniform weights over used orders, zero precisions replaced by
// 1e-9, brevity penalty against the closest reference length (ties toward
// the shorter reference). Fewer than two keyphrases -> 0.
double self_bleu(const KeyphraseList& kps);

// Mean over unordered pairs of 100 * (1 - lev(a, b) / max(|a|, |b|)) on
// space-joined keyphrase strings. Fewer than two keyphrases -> 0.
double edit_dist(const KeyphraseList& kps);

// Levenshtein distance between two strings (unit edit costs).
std::size_t levenshtein(const std::string& a, const std::string& b);

// Maps a keyphrase to a fixed-width vector. Zero vectors are excluded
// from cosine averaging by the caller.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(const std::vector<std::string>& kp) const = 0;
};

// Mean pairwise cosine over keyphrases whose embeddings are nonzero;
// fewer than two nonzero embeddings -> 0.
double emb_sim(const KeyphraseList& kps, const Embedder& embedder);

// Phrase embedding = mean of per-token rows of an embedding matrix;
// unknown tokens use the UNK row.
class TokenAverageEmbedder : public Embedder {
 public:
  TokenAverageEmbedder(const Tensor<double>& token_vectors, const Vocabulary& vocab)
      : vectors_(token_vectors), vocab_(vocab) {}
  std::vector<double> embed(const std::vector<std::string>& kp) const override;

 private:
  Tensor<double> vectors_;
  Vocabulary vocab_;
};

// Word vectors from a UTF-8 text file of `token v1 v2 ... vd` lines.
// Tokens missing from the file embed to zero (excluded from averaging);
// inconsistent widths are a data error.
class FileEmbedder : public Embedder {
 public:
  explicit FileEmbedder(const std::string& path);
  std::vector<double> embed(const std::vector<std::string>& kp) const override;
  std::size_t dim() const { return dim_; }

 private:
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::size_t dim_ = 0;
};

// Deterministic fallback needing no trained vectors: each token hashes to
// one bucket of a fixed-width one-hot, phrases average their buckets.
class HashBucketEmbedder : public Embedder {
 public:
  explicit HashBucketEmbedder(std::size_t width = 256) : width_(width) {}
  std::vector<double> embed(const std::vector<std::string>& kp) const override;

 private:
  std::size_t width_;
};

struct RecordMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double num_kps = 0;
  double dup_kp_pct = 0;
  double dup_token_pct = 0;
  double self_bleu = 0;
  double edit_dist = 0;
  double emb_sim = 0;
};

struct MetricsReport {
  std::vector<RecordMetrics> records;
  RecordMetrics mean;  // unweighted average over records
};

// Scores every prediction/gold pair and averages per-record values.
// Lists must align one-to-one.
MetricsReport evaluate_records(const std::vector<KeyphraseList>& predicted,
                               const std::vector<KeyphraseList>& gold,
                               const Embedder& embedder);

// Renders a report as a JSON document / a CSV table (one row per record
// plus a mean row).
std::string report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);

}  // namespace kpgen

#endif  // KPGEN_METRICS_HPP_
