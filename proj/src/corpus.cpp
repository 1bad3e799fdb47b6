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

#include "kpgen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "kpgen/error.hpp"

namespace kpgen {

namespace {
const char* kReserved[Vocabulary::kNumReserved] = {"<pad>", "<unk>", "<bos>",
                                                   "<eos>", "<sep>"};
const std::string kDigitToken = "<digit>";
}  // namespace

Vocabulary::Vocabulary() {
  for (int i = 0; i < kNumReserved; ++i) {
    id_to_token.emplace_back(kReserved[i]);
    token_to_id[kReserved[i]] = i;
  }
}

int Vocabulary::add(const std::string& tok) {
  auto it = token_to_id.find(tok);
  if (it != token_to_id.end()) return it->second;
  int id = size();
  id_to_token.push_back(tok);
  token_to_id[tok] = id;
  return id;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string buf;
  auto flush = [&] {
    if (!buf.empty()) {
      out.push_back(buf);
      buf.clear();
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, kDigitToken.size(), kDigitToken) == 0) {
      flush();
      out.push_back(kDigitToken);
      i += kDigitToken.size();
      continue;
    }
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isdigit(c)) {
      flush();
      while (i < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[i])))
        ++i;
      out.push_back(kDigitToken);
      continue;
    }
    if (std::isalpha(c)) {
      buf.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
    ++i;
  }
  flush();
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs,
                       std::size_t cap) {
  if (cap <= Vocabulary::kNumReserved)
    throw ConfigError("vocabulary cap must exceed the reserved token count");
  std::map<std::string, std::size_t> counts;
  Vocabulary vocab;
  for (const auto& doc : docs)
    for (const std::string& tok : doc)
      if (!vocab.contains(tok)) ++counts[tok];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::size_t room = cap - Vocabulary::kNumReserved;
  for (std::size_t i = 0; i < ranked.size() && i < room; ++i)
    vocab.add(ranked[i].first);
  return vocab;
}

Vocabulary build_source_vocab(const std::vector<Example>& examples,
                              std::size_t cap) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(examples.size());
  for (const Example& e : examples) {
    std::vector<std::string> doc = e.title;
    doc.insert(doc.end(), e.abstract.begin(), e.abstract.end());
    docs.push_back(std::move(doc));
  }
  return build_vocab(docs, cap);
}

Vocabulary build_target_vocab(const std::vector<Example>& examples,
                              std::size_t cap) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(examples.size());
  for (const Example& e : examples) {
    std::vector<std::string> doc;
    for (const auto& kp : e.keyphrases)
      doc.insert(doc.end(), kp.begin(), kp.end());
    docs.push_back(std::move(doc));
  }
  return build_vocab(docs, cap);
}

std::size_t find_subsequence(const std::vector<std::string>& hay,
                             const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size())
    return std::string::npos;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < needle.size(); ++j)
      if (hay[i + j] != needle[j]) {
        match = false;
        break;
      }
    if (match) return i;
  }
  return std::string::npos;
}

namespace {

// Builds the source side of a linearized example: source ids, the per
// position copy ids, and the extended vocabulary. Returns the (possibly
// truncated) source tokens; ext_id maps each extended token to its id.
std::vector<std::string> fill_source(LinearizedExample& lin, const Example& ex,
                                     const Vocabulary& src_vocab,
                                     const Vocabulary& tgt_vocab,
                                     std::size_t max_src_len,
                                     std::unordered_map<std::string, int>& ext_id) {
  std::vector<std::string> source = ex.title;
  source.insert(source.end(), ex.abstract.begin(), ex.abstract.end());
  if (max_src_len > 0 && source.size() > max_src_len)
    source.resize(max_src_len);
  if (source.empty()) throw DataError("example has an empty source");

  lin.source_ids.reserve(source.size());
  lin.copy_ids.reserve(source.size());
  for (const std::string& tok : source) {
    lin.source_ids.push_back(src_vocab.id_or_unk(tok));
    auto it = tgt_vocab.token_to_id.find(tok);
    if (it != tgt_vocab.token_to_id.end()) {
      lin.copy_ids.push_back(it->second);
    } else {
      auto e = ext_id.find(tok);
      if (e == ext_id.end()) {
        int id = tgt_vocab.size() + static_cast<int>(lin.ext_tokens.size());
        ext_id.emplace(tok, id);
        lin.ext_tokens.push_back(tok);
        lin.copy_ids.push_back(id);
      } else {
        lin.copy_ids.push_back(e->second);
      }
    }
  }
  return source;
}

}  // namespace

LinearizedExample linearize_source(const Example& ex, const Vocabulary& src_vocab,
                                   const Vocabulary& tgt_vocab,
                                   std::size_t max_src_len) {
  LinearizedExample lin;
  std::unordered_map<std::string, int> ext_id;
  fill_source(lin, ex, src_vocab, tgt_vocab, max_src_len, ext_id);
  return lin;
}

LinearizedExample linearize(const Example& ex, const Vocabulary& src_vocab,
                            const Vocabulary& tgt_vocab,
                            std::size_t max_src_len) {
  if (ex.keyphrases.empty())
    throw DataError("example has no keyphrases");
  for (const auto& kp : ex.keyphrases)
    if (kp.empty()) throw DataError("example has an empty keyphrase");

  LinearizedExample lin;
  std::unordered_map<std::string, int> ext_id;
  const std::vector<std::string> source =
      fill_source(lin, ex, src_vocab, tgt_vocab, max_src_len, ext_id);

  // Present keyphrases ordered by first occurrence (stable for ties), then
  // absent ones in their given order.
  std::vector<std::pair<std::size_t, std::size_t>> present;  // (pos, kp idx)
  std::vector<std::size_t> absent;
  for (std::size_t i = 0; i < ex.keyphrases.size(); ++i) {
    std::size_t pos = find_subsequence(source, ex.keyphrases[i]);
    if (pos == std::string::npos)
      absent.push_back(i);
    else
      present.emplace_back(pos, i);
  }
  std::stable_sort(present.begin(), present.end(),
                   [](const auto& a, const auto& b) {
                     return a.first < b.first;
                   });
  std::vector<std::size_t> order;
  order.reserve(ex.keyphrases.size());
  for (const auto& p : present) order.push_back(p.second);
  order.insert(order.end(), absent.begin(), absent.end());

  auto target_id = [&](const std::string& tok) {
    auto it = tgt_vocab.token_to_id.find(tok);
    if (it != tgt_vocab.token_to_id.end()) return it->second;
    auto e = ext_id.find(tok);
    if (e != ext_id.end()) return e->second;
    return static_cast<int>(Vocabulary::kUnk);
  };

  lin.target_ids.push_back(Vocabulary::kBos);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) lin.target_ids.push_back(Vocabulary::kSep);
    for (const std::string& tok : ex.keyphrases[order[i]])
      lin.target_ids.push_back(target_id(tok));
  }
  lin.target_ids.push_back(Vocabulary::kEos);
  return lin;
}

std::vector<std::vector<std::string>> delinearize(
    const std::vector<int>& target_ids, const Vocabulary& tgt_vocab,
    const std::vector<std::string>& ext_tokens) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> cur;
  for (int id : target_ids) {
    if (id == Vocabulary::kBos) continue;
    if (id == Vocabulary::kEos) break;
    if (id == Vocabulary::kSep) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    if (id >= tgt_vocab.size()) {
      std::size_t j = static_cast<std::size_t>(id - tgt_vocab.size());
      cur.push_back(j < ext_tokens.size() ? ext_tokens[j]
                                          : tgt_vocab.token(Vocabulary::kUnk));
    } else {
      cur.push_back(tgt_vocab.token(id));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<Example> read_examples_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<Example> out;
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
    if (!j.is_object() || !j.contains("title") || !j.contains("abstract") ||
        !j.contains("keyphrases") || !j["title"].is_string() ||
        !j["abstract"].is_string() || !j["keyphrases"].is_array())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected object with string title, string "
                      "abstract, array keyphrases");
    Example ex;
    ex.title = tokenize(j["title"].get<std::string>());
    ex.abstract = tokenize(j["abstract"].get<std::string>());
    for (const auto& kp : j["keyphrases"]) {
      if (!kp.is_string())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": keyphrases must be strings");
      std::vector<std::string> toks = tokenize(kp.get<std::string>());
      if (toks.empty())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": keyphrase tokenizes to nothing: '" +
                        kp.get<std::string>() + "'");
      ex.keyphrases.push_back(std::move(toks));
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void write_examples_jsonl(const std::string& path,
                          const std::vector<Example>& examples) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const Example& ex : examples) {
    nlohmann::json j;
    j["title"] = detokenize(ex.title);
    j["abstract"] = detokenize(ex.abstract);
    nlohmann::json kps = nlohmann::json::array();
    for (const auto& kp : ex.keyphrases) kps.push_back(detokenize(kp));
    j["keyphrases"] = std::move(kps);
    out << j.dump() << "\n";
  }
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace kpgen
