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

#ifndef KPGEN_DECODE_HPP_
#define KPGEN_DECODE_HPP_

#include <cassert>
#include <cstddef>
#include <string>
#include <vector>

#include "kpgen/corpus.hpp"
#include "kpgen/error.hpp"
#include "kpgen/model.hpp"
#include "kpgen/tape.hpp"

namespace kpgen {

struct Prediction {
  // Ordered keyphrases as surface token lists; no empty phrase survives
  // parsing and no deduplication is applied.
  std::vector<std::vector<std::string>> keyphrases;
  // Decoded id frame starting with BOS; ends with EOS unless the length
  // cap cut generation short. Extended ids keep their copy-map values.
  std::vector<int> raw_ids;
  // Space-joined surface rendering of raw_ids.
  std::string raw;
  // Mixture probability of each chosen token, aligned with raw_ids[1..].
  std::vector<double> step_probs;
};

// Surface form of one decoded id under a target vocabulary plus the
// example's extended tokens. Unknown extended ids render as UNK.
inline std::string surface_token(int id, const Vocabulary& tgt_vocab,
                                 const std::vector<std::string>& ext_tokens) {
  if (id >= 0 && static_cast<std::size_t>(id) < tgt_vocab.size()) return tgt_vocab.token(id);
  const std::size_t e = static_cast<std::size_t>(id) - tgt_vocab.size();
  if (id >= 0 && e < ext_tokens.size()) return ext_tokens[e];
  return tgt_vocab.token(Vocabulary::kUnk);
}

// Splits a decoded id frame into keyphrases: BOS and PAD are skipped, EOS
// ends the frame, SEP separates phrases, and empty segments (consecutive
// SEPs, leading or trailing SEP) are dropped. Extended ids map back to the
// source surface tokens they copied.
inline std::vector<std::vector<std::string>> parse_keyphrases(
    const std::vector<int>& raw_ids, const Vocabulary& tgt_vocab,
    const std::vector<std::string>& ext_tokens) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (int id : raw_ids) {
    if (id == Vocabulary::kBos || id == Vocabulary::kPad) continue;
    if (id == Vocabulary::kEos) break;
    if (id == Vocabulary::kSep) {
      flush();
      continue;
    }
    cur.push_back(surface_token(id, tgt_vocab, ext_tokens));
  }
  flush();
  return out;
}

// Inverse of parse_keyphrases for well-formed phrase lists: frames the
// phrases as [BOS kp1 SEP kp2 ... EOS]. Tokens resolve to target ids
// first, then to extended ids, then to UNK.
inline std::vector<int> serialize_keyphrases(
    const std::vector<std::vector<std::string>>& keyphrases, const Vocabulary& tgt_vocab,
    const std::vector<std::string>& ext_tokens) {
  std::vector<int> ids = {Vocabulary::kBos};
  for (std::size_t i = 0; i < keyphrases.size(); ++i) {
    if (i > 0) ids.push_back(Vocabulary::kSep);
    for (const std::string& tok : keyphrases[i]) {
      if (tgt_vocab.contains(tok)) {
        ids.push_back(tgt_vocab.id_or_unk(tok));
        continue;
      }
      int id = Vocabulary::kUnk;
      for (std::size_t e = 0; e < ext_tokens.size(); ++e) {
        if (ext_tokens[e] == tok) {
          id = static_cast<int>(tgt_vocab.size() + e);
          break;
        }
      }
      ids.push_back(id);
    }
  }
  ids.push_back(Vocabulary::kEos);
  return ids;
}

// Greedy decoding with the k = 0 head only. At each step the argmax of the
// mixture over target plus extended ids is taken, ties resolved toward the
// lowest id; PAD and BOS are never selectable. The chosen token feeds the
// next step through its target embedding, with extended ids falling back
// to UNK's embedding. Generation stops at EOS or after max_len tokens.
// lin supplies the source side (source_ids, copy_ids, ext_tokens); its
// target side is ignored.
template <typename T>
Prediction greedy_decode(Parameters<T>& params, const ModelConfig& cfg,
                         const LinearizedExample& lin, const Vocabulary& tgt_vocab,
                         std::size_t max_len) {
  if (max_len < 1) throw ConfigError("decode length cap must be at least 1");
  if (tgt_vocab.size() != cfg.v_tgt) {
    throw DimError("target vocabulary size does not match the model");
  }
  Tape<T> tape;
  ParamVars<T> pv = load_params(tape, params, false);
  Var H = encode(tape, pv, cfg, lin.source_ids);
  const std::size_t width = cfg.v_tgt + lin.n_ext();

  Prediction pred;
  pred.raw_ids.push_back(Vocabulary::kBos);
  LstmState<T> state = initial_decoder_state(tape, cfg);
  Var e_prev = target_embedding(tape, pv, cfg, Vocabulary::kBos);
  for (std::size_t step = 0; step < max_len; ++step) {
    state = lstm_step(tape, pv.dec_w, pv.dec_b, e_prev, state, cfg.d_s);
    HeadDistributions head =
        head_distributions(tape, pv, H, state.h, e_prev, 0, lin.copy_ids, width);
    const Tensor<T>& mix = tape.value(head.mixture);
    int best = -1;
    T best_p = T(0);
    for (std::size_t i = 0; i < width; ++i) {
      const int id = static_cast<int>(i);
      if (id == Vocabulary::kPad || id == Vocabulary::kBos) continue;
      if (best < 0 || mix.at(0, i) > best_p) {
        best = id;
        best_p = mix.at(0, i);
      }
    }
    assert(best != Vocabulary::kPad && best != Vocabulary::kBos);
    pred.raw_ids.push_back(best);
    pred.step_probs.push_back(static_cast<double>(best_p));
    if (best == Vocabulary::kEos) break;
    e_prev = target_embedding(tape, pv, cfg, best);
  }

  pred.keyphrases = parse_keyphrases(pred.raw_ids, tgt_vocab, lin.ext_tokens);
  for (std::size_t i = 0; i < pred.raw_ids.size(); ++i) {
    if (i > 0) pred.raw += ' ';
    pred.raw += surface_token(pred.raw_ids[i], tgt_vocab, lin.ext_tokens);
  }
  return pred;
}

// JSONL persistence: one {"keyphrases": [[...]], "raw": "..."} object per
// input record, aligned line-by-line with the decoded file.
void write_predictions_jsonl(const std::string& path, const std::vector<Prediction>& preds);

struct PredictionRecord {
  std::vector<std::vector<std::string>> keyphrases;
  std::string raw;
};

std::vector<PredictionRecord> read_predictions_jsonl(const std::string& path);

}  // namespace kpgen

#endif  // KPGEN_DECODE_HPP_
