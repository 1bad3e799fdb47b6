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

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace kpgen {

// One document: tokenized title, abstract, and gold keyphrases.
struct Example {
  std::vector<std::string> title;
  std::vector<std::string> abstract;
  std::vector<std::vector<std::string>> keyphrases;
};

// Token table with five fixed reserved entries at the front.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kSep = 4;
  static constexpr int kNumReserved = 5;

  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, int> token_to_id;

  Vocabulary();

  int size() const { return static_cast<int>(id_to_token.size()); }
  bool contains(const std::string& tok) const {
    return token_to_id.count(tok) != 0;
  }
  int id_or_unk(const std::string& tok) const {
    auto it = token_to_id.find(tok);
    return it == token_to_id.end() ? kUnk : it->second;
  }
  const std::string& token(int id) const { return id_to_token[id]; }
  // Appends a non-reserved token; returns its id. No-op if present.
  int add(const std::string& tok);
};

// An example mapped to id space, ready for the model. Extended ids for
// source tokens outside the target vocabulary start at |target vocab| and
// are assigned in order of first occurrence; repeated tokens share one id.
struct LinearizedExample {
  std::vector<int> source_ids;          // source-vocab ids for the encoder
  std::vector<int> copy_ids;            // per source position: target or extended id
  std::vector<std::string> ext_tokens;  // token owning id |target vocab| + j
  std::vector<int> target_ids;          // BOS kp1 SEP kp2 ... EOS

  std::size_t n_ext() const { return ext_tokens.size(); }
};

// Lowercases and splits on any character that is not an ASCII letter or
// digit; every maximal digit run becomes the placeholder token <digit>,
// which is also kept intact when it appears literally (so normalized text
// re-tokenizes to itself).
std::vector<std::string> tokenize(const std::string& text);

std::string detokenize(const std::vector<std::string>& tokens);

// Most frequent tokens up to cap (reserved entries included in the cap);
// frequency ties break lexicographically. cap must exceed the reserved
// count.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs,
                       std::size_t cap);
Vocabulary build_source_vocab(const std::vector<Example>& examples,
                              std::size_t cap);
Vocabulary build_target_vocab(const std::vector<Example>& examples,
                              std::size_t cap);

// Position of needle as a contiguous run in hay, or npos.
std::size_t find_subsequence(const std::vector<std::string>& hay,
                             const std::vector<std::string>& needle);

// Builds ids for one example: source = title then abstract, truncated to
// max_src_len when nonzero; target = keyphrases that occur contiguously in
// the (truncated) source ordered by first occurrence, then the rest in
// given order, SEP-joined and BOS/EOS-framed. Target tokens outside the
// target vocabulary use their extended id when copyable, UNK otherwise.
LinearizedExample linearize(const Example& ex, const Vocabulary& src_vocab,
                            const Vocabulary& tgt_vocab,
                            std::size_t max_src_len = 0);

// Source side only, for decoding inputs that carry no gold keyphrases;
// target_ids stays empty.
LinearizedExample linearize_source(const Example& ex, const Vocabulary& src_vocab,
                                   const Vocabulary& tgt_vocab,
                                   std::size_t max_src_len = 0);

// Inverse of target linearization: splits on SEP between BOS and EOS and
// maps ids back to tokens (extended ids through ext_tokens).
std::vector<std::vector<std::string>> delinearize(
    const std::vector<int>& target_ids, const Vocabulary& tgt_vocab,
    const std::vector<std::string>& ext_tokens);

// JSONL with keys title, abstract (strings), keyphrases (array of strings),
// one object per line. Reading tokenizes; writing joins tokens with spaces.
std::vector<Example> read_examples_jsonl(const std::string& path);
void write_examples_jsonl(const std::string& path,
                          const std::vector<Example>& examples);

}  // namespace kpgen
