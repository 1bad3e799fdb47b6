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

#include "kpgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kpgen/error.hpp"
#include "kpgen/stemmer.hpp"

namespace kpgen {
namespace {

std::string join_tokens(const std::vector<std::string>& kp) {
  std::string out;
  for (std::size_t i = 0; i < kp.size(); ++i) {
    if (i > 0) out += ' ';
    out += kp[i];
  }
  return out;
}

// Stemmed, deduplicated phrase set in first-seen order.
std::vector<std::vector<std::string>> stem_dedup(const KeyphraseList& kps) {
  std::vector<std::vector<std::string>> out;
  std::set<std::vector<std::string>> seen;
  for (const auto& kp : kps) {
    std::vector<std::string> stemmed;
    stemmed.reserve(kp.size());
    for (const std::string& tok : kp) stemmed.push_back(porter_stem(tok));
    if (seen.insert(stemmed).second) out.push_back(std::move(stemmed));
  }
  return out;
}

// n-gram counts of one token list, with n-grams keyed by joined tokens.
std::map<std::string, int> ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
  std::map<std::string, int> counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0) key += '\x1f';
      key += toks[i + t];
    }
    ++counts[key];
  }
  return counts;
}

// BLEU of one candidate against a reference set under the fixed
// configuration documented in the header.
double bleu_against(const std::vector<std::string>& cand,
                    const std::vector<const std::vector<std::string>*>& refs) {
  const std::size_t max_n = std::min<std::size_t>(4, cand.size());
  if (max_n == 0) return 0.0;
  const double w = 1.0 / static_cast<double>(max_n);
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    std::map<std::string, int> cand_counts = ngram_counts(cand, n);
    int total = 0, clipped = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      int best_ref = 0;
      for (const auto* ref : refs) {
        std::map<std::string, int> ref_counts = ngram_counts(*ref, n);
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) best_ref = std::max(best_ref, it->second);
      }
      clipped += std::min(count, best_ref);
    }
    double p = total > 0 ? static_cast<double>(clipped) / static_cast<double>(total) : 0.0;
    if (p == 0.0) p = 1e-9;
    log_sum += w * std::log(p);
  }
  // Brevity penalty against the closest reference length, ties toward the
  // shorter reference.
  const std::size_t c = cand.size();
  std::size_t r = refs.front()->size();
  for (const auto* ref : refs) {
    const std::size_t len = ref->size();
    const auto dist = [&](std::size_t l) {
      return l > c ? l - c : c - l;
    };
    if (dist(len) < dist(r) || (dist(len) == dist(r) && len < r)) r = len;
  }
  const double bp =
      c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * std::exp(log_sum);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

bool is_zero(const std::vector<double>& v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

QualityScores quality_at_m(const KeyphraseList& predicted, const KeyphraseList& gold) {
  QualityScores q;
  std::vector<std::vector<std::string>> pred = stem_dedup(predicted);
  std::vector<std::vector<std::string>> gld = stem_dedup(gold);
  if (pred.empty() || gld.empty()) return q;
  std::set<std::vector<std::string>> gold_set(gld.begin(), gld.end());
  std::size_t matches = 0;
  for (const auto& kp : pred) {
    if (gold_set.count(kp)) ++matches;
  }
  q.precision = static_cast<double>(matches) / static_cast<double>(pred.size());
  q.recall = static_cast<double>(matches) / static_cast<double>(gld.size());
  q.f1 = (q.precision + q.recall) > 0.0
             ? 2.0 * q.precision * q.recall / (q.precision + q.recall)
             : 0.0;
  return q;
}

double dup_kp_pct(const KeyphraseList& kps) {
  if (kps.empty()) return 0.0;
  std::set<std::vector<std::string>> unique(kps.begin(), kps.end());
  return (1.0 - static_cast<double>(unique.size()) / static_cast<double>(kps.size())) * 100.0;
}

double dup_token_pct(const KeyphraseList& kps) {
  std::size_t total = 0;
  std::set<std::string> unique;
  for (const auto& kp : kps) {
    for (const std::string& tok : kp) {
      ++total;
      unique.insert(tok);
    }
  }
  if (total == 0) return 0.0;
  return (1.0 - static_cast<double>(unique.size()) / static_cast<double>(total)) * 100.0;
}

double self_bleu(const KeyphraseList& kps) {
  if (kps.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < kps.size(); ++i) {
    std::vector<const std::vector<std::string>*> refs;
    for (std::size_t r = 0; r < kps.size(); ++r) {
      if (r != i) refs.push_back(&kps[r]);
    }
    sum += bleu_against(kps[i], refs);
  }
  return sum / static_cast<double>(kps.size()) * 100.0;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t jj = 0; jj <= b.size(); ++jj) prev[jj] = jj;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t jj = 1; jj <= b.size(); ++jj) {
      const std::size_t sub = prev[jj - 1] + (a[i - 1] == b[jj - 1] ? 0 : 1);
      cur[jj] = std::min({prev[jj] + 1, cur[jj - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double edit_dist(const KeyphraseList& kps) {
  if (kps.size() < 2) return 0.0;
  std::vector<std::string> joined;
  joined.reserve(kps.size());
  for (const auto& kp : kps) joined.push_back(join_tokens(kp));
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < joined.size(); ++i) {
    for (std::size_t jj = i + 1; jj < joined.size(); ++jj) {
      const std::size_t lev = levenshtein(joined[i], joined[jj]);
      const std::size_t denom = std::max(joined[i].size(), joined[jj].size());
      sum += denom == 0 ? 100.0
                        : 100.0 * (1.0 - static_cast<double>(lev) / static_cast<double>(denom));
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double emb_sim(const KeyphraseList& kps, const Embedder& embedder) {
  std::vector<std::vector<double>> vecs;
  for (const auto& kp : kps) {
    std::vector<double> v = embedder.embed(kp);
    if (!is_zero(v)) vecs.push_back(std::move(v));
  }
  if (vecs.size() < 2) return 0.0;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    for (std::size_t jj = i + 1; jj < vecs.size(); ++jj) {
      if (vecs[i].size() != vecs[jj].size()) {
        throw DataError("embedding widths disagree");
      }
      sum += cosine(vecs[i], vecs[jj]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

std::vector<double> TokenAverageEmbedder::embed(const std::vector<std::string>& kp) const {
  std::vector<double> out(vectors_.cols(), 0.0);
  if (kp.empty()) return out;
  for (const std::string& tok : kp) {
    const int id = vocab_.id_or_unk(tok);
    for (std::size_t jj = 0; jj < vectors_.cols(); ++jj) {
      out[jj] += vectors_.at(static_cast<std::size_t>(id), jj);
    }
  }
  for (double& x : out) x /= static_cast<double>(kp.size());
  return out;
}

FileEmbedder::FileEmbedder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> vec;
    double x;
    while (ss >> x) vec.push_back(x);
    if (token.empty() || vec.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected `token v1 v2 ...`");
    }
    if (dim_ == 0) {
      dim_ = vec.size();
    } else if (vec.size() != dim_) {
      throw DataError(path + ":" + std::to_string(lineno) + ": vector width " +
                      std::to_string(vec.size()) + " != " + std::to_string(dim_));
    }
    vectors_[token] = std::move(vec);
  }
  if (vectors_.empty()) throw DataError(path + ": no vectors");
}

std::vector<double> FileEmbedder::embed(const std::vector<std::string>& kp) const {
  std::vector<double> out(dim_, 0.0);
  std::size_t found = 0;
  for (const std::string& tok : kp) {
    auto it = vectors_.find(tok);
    if (it == vectors_.end()) continue;
    ++found;
    for (std::size_t jj = 0; jj < dim_; ++jj) out[jj] += it->second[jj];
  }
  if (found == 0) return std::vector<double>(dim_, 0.0);
  for (double& x : out) x /= static_cast<double>(found);
  return out;
}

std::vector<double> HashBucketEmbedder::embed(const std::vector<std::string>& kp) const {
  std::vector<double> out(width_, 0.0);
  if (kp.empty()) return out;
  for (const std::string& tok : kp) {
    out[fnv1a(tok) % width_] += 1.0;
  }
  for (double& x : out) x /= static_cast<double>(kp.size());
  return out;
}

MetricsReport evaluate_records(const std::vector<KeyphraseList>& predicted,
                               const std::vector<KeyphraseList>& gold,
                               const Embedder& embedder) {
  if (predicted.size() != gold.size()) {
    throw DataError("prediction and gold record counts differ: " +
                    std::to_string(predicted.size()) + " vs " + std::to_string(gold.size()));
  }
  MetricsReport report;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    RecordMetrics r;
    QualityScores q = quality_at_m(predicted[i], gold[i]);
    r.precision = q.precision;
    r.recall = q.recall;
    r.f1 = q.f1;
    r.num_kps = static_cast<double>(predicted[i].size());
    r.dup_kp_pct = dup_kp_pct(predicted[i]);
    r.dup_token_pct = dup_token_pct(predicted[i]);
    r.self_bleu = self_bleu(predicted[i]);
    r.edit_dist = edit_dist(predicted[i]);
    r.emb_sim = emb_sim(predicted[i], embedder);
    report.records.push_back(r);
  }
  if (!report.records.empty()) {
    RecordMetrics& m = report.mean;
    for (const RecordMetrics& r : report.records) {
      m.precision += r.precision;
      m.recall += r.recall;
      m.f1 += r.f1;
      m.num_kps += r.num_kps;
      m.dup_kp_pct += r.dup_kp_pct;
      m.dup_token_pct += r.dup_token_pct;
      m.self_bleu += r.self_bleu;
      m.edit_dist += r.edit_dist;
      m.emb_sim += r.emb_sim;
    }
    const double n = static_cast<double>(report.records.size());
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    m.num_kps /= n;
    m.dup_kp_pct /= n;
    m.dup_token_pct /= n;
    m.self_bleu /= n;
    m.edit_dist /= n;
    m.emb_sim /= n;
  }
  return report;
}

namespace {

nlohmann::json record_to_json(const RecordMetrics& r) {
  return nlohmann::json{{"precision", r.precision},
                        {"recall", r.recall},
                        {"f1", r.f1},
                        {"num_kps", r.num_kps},
                        {"dup_kp_pct", r.dup_kp_pct},
                        {"dup_token_pct", r.dup_token_pct},
                        {"self_bleu", r.self_bleu},
                        {"edit_dist", r.edit_dist},
                        {"emb_sim", r.emb_sim}};
}

void record_to_csv_row(std::ostringstream& out, const std::string& label,
                       const RecordMetrics& r) {
  out << label << ',' << r.precision << ',' << r.recall << ',' << r.f1 << ',' << r.num_kps
      << ',' << r.dup_kp_pct << ',' << r.dup_token_pct << ',' << r.self_bleu << ','
      << r.edit_dist << ',' << r.emb_sim << '\n';
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["mean"] = record_to_json(report.mean);
  j["records"] = nlohmann::json::array();
  for (const RecordMetrics& r : report.records) j["records"].push_back(record_to_json(r));
  return j.dump(2);
}

std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "record,precision,recall,f1,num_kps,dup_kp_pct,dup_token_pct,self_bleu,edit_dist,"
         "emb_sim\n";
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    record_to_csv_row(out, std::to_string(i), report.records[i]);
  }
  record_to_csv_row(out, "mean", report.mean);
  return out.str();
}

}  // namespace kpgen
