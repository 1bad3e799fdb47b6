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

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "kpgen/corpus.hpp"
#include "kpgen/lstm.hpp"
#include "kpgen/rng.hpp"
#include "kpgen/tape.hpp"

namespace kpgen {

struct ModelConfig {
  std::size_t d_emb = 32;
  std::size_t d_h = 32;   // encoder hidden per direction
  std::size_t d_s = 64;   // decoder hidden
  std::size_t K = 2;      // steps ahead; K+1 attention heads
  std::size_t v_src = 0;
  std::size_t v_tgt = 0;

  void validate() const {
    if (d_emb == 0 || d_h == 0 || d_s == 0)
      throw ConfigError("model dimensions must be positive");
    if (v_src < Vocabulary::kNumReserved || v_tgt < Vocabulary::kNumReserved)
      throw ConfigError("vocabulary sizes below reserved count");
  }
};

// All learnable tensors. The visit order below is the canonical parameter
// order: the optimizer state and the checkpoint tensor index both follow it.
template <typename T>
struct Parameters {
  ModelConfig cfg;
  Tensor<T> src_embed, tgt_embed;
  Tensor<T> enc_fwd_w, enc_fwd_b;
  Tensor<T> enc_bwd_w, enc_bwd_b;
  Tensor<T> dec_w, dec_b;
  std::vector<Tensor<T>> attn;  // K+1 matrices, each [d_s x 2*d_h]
  Tensor<T> w_u, b_u;
  Tensor<T> w_v, b_v;
  Tensor<T> w_c, b_c;

  static Parameters init(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    Parameters p;
    p.cfg = cfg;
    std::size_t dh2 = 2 * cfg.d_h;
    p.src_embed = Tensor<T>({cfg.v_src, cfg.d_emb});
    p.tgt_embed = Tensor<T>({cfg.v_tgt, cfg.d_emb});
    p.enc_fwd_w = Tensor<T>({4 * cfg.d_h, cfg.d_emb + cfg.d_h});
    p.enc_fwd_b = Tensor<T>({1, 4 * cfg.d_h});
    p.enc_bwd_w = Tensor<T>({4 * cfg.d_h, cfg.d_emb + cfg.d_h});
    p.enc_bwd_b = Tensor<T>({1, 4 * cfg.d_h});
    p.dec_w = Tensor<T>({4 * cfg.d_s, cfg.d_emb + cfg.d_s});
    p.dec_b = Tensor<T>({1, 4 * cfg.d_s});
    for (std::size_t k = 0; k <= cfg.K; ++k)
      p.attn.emplace_back(std::vector<std::size_t>{cfg.d_s, dh2});
    p.w_u = Tensor<T>({cfg.d_s, cfg.d_s + dh2});
    p.b_u = Tensor<T>({1, cfg.d_s});
    p.w_v = Tensor<T>({cfg.v_tgt, cfg.d_s});
    p.b_v = Tensor<T>({1, cfg.v_tgt});
    p.w_c = Tensor<T>({1, cfg.d_s + dh2 + cfg.d_emb});
    p.b_c = Tensor<T>({1, 1});
    p.visit([&rng](const std::string& name, Tensor<T>& t) {
      if (name.size() >= 2 && name[name.size() - 2] == '_' &&
          name.back() == 'b')
        return;  // biases start at zero
      if (name == "b_u" || name == "b_v" || name == "b_c") return;
      for (T& v : t.data) v = static_cast<T>(rng.uniform(-0.1, 0.1));
    });
    return p;
  }

  void visit(const std::function<void(const std::string&, Tensor<T>&)>& fn) {
    fn("src_embed", src_embed);
    fn("tgt_embed", tgt_embed);
    fn("enc_fwd_w", enc_fwd_w);
    fn("enc_fwd_b", enc_fwd_b);
    fn("enc_bwd_w", enc_bwd_w);
    fn("enc_bwd_b", enc_bwd_b);
    fn("dec_w", dec_w);
    fn("dec_b", dec_b);
    for (std::size_t k = 0; k < attn.size(); ++k)
      fn("attn_" + std::to_string(k), attn[k]);
    fn("w_u", w_u);
    fn("b_u", b_u);
    fn("w_v", w_v);
    fn("b_v", b_v);
    fn("w_c", w_c);
    fn("b_c", b_c);
  }

  std::vector<std::pair<std::string, Tensor<T>*>> named_tensors() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    visit([&out](const std::string& name, Tensor<T>& t) {
      out.emplace_back(name, &t);
    });
    return out;
  }

  std::vector<Tensor<T>*> tensors() {
    std::vector<Tensor<T>*> out;
    visit([&out](const std::string&, Tensor<T>& t) { out.push_back(&t); });
    return out;
  }

  std::size_t count() {
    std::size_t n = 0;
    visit([&n](const std::string&, Tensor<T>& t) { n += t.numel(); });
    return n;
  }
};

// Tape handles for one pass; order mirrors Parameters::visit.
template <typename T>
struct ParamVars {
  Var src_embed, tgt_embed;
  Var enc_fwd_w, enc_fwd_b, enc_bwd_w, enc_bwd_b;
  Var dec_w, dec_b;
  std::vector<Var> attn;
  Var w_u, b_u, w_v, b_v, w_c, b_c;

  std::vector<Var> vars() const {
    std::vector<Var> out = {src_embed, tgt_embed, enc_fwd_w, enc_fwd_b,
                            enc_bwd_w, enc_bwd_b, dec_w,     dec_b};
    out.insert(out.end(), attn.begin(), attn.end());
    for (Var v : {w_u, b_u, w_v, b_v, w_c, b_c}) out.push_back(v);
    return out;
  }
};

template <typename T>
ParamVars<T> load_params(Tape<T>& tape, Parameters<T>& params,
                         bool trainable) {
  ParamVars<T> pv;
  std::vector<Var> order;
  params.visit([&](const std::string&, Tensor<T>& t) {
    order.push_back(trainable ? tape.leaf(t) : tape.constant(t));
  });
  std::size_t i = 0;
  pv.src_embed = order[i++];
  pv.tgt_embed = order[i++];
  pv.enc_fwd_w = order[i++];
  pv.enc_fwd_b = order[i++];
  pv.enc_bwd_w = order[i++];
  pv.enc_bwd_b = order[i++];
  pv.dec_w = order[i++];
  pv.dec_b = order[i++];
  for (std::size_t k = 0; k < params.attn.size(); ++k)
    pv.attn.push_back(order[i++]);
  pv.w_u = order[i++];
  pv.b_u = order[i++];
  pv.w_v = order[i++];
  pv.b_v = order[i++];
  pv.w_c = order[i++];
  pv.b_c = order[i++];
  return pv;
}

// Bi-directional encoder: row i of the result is the forward state at i
// concatenated with the backward state at i. Shape [S x 2*d_h].
template <typename T>
Var encode(Tape<T>& tape, const ParamVars<T>& pv, const ModelConfig& cfg,
           const std::vector<int>& source_ids) {
  if (source_ids.empty()) throw DataError("encoder needs a nonempty source");
  std::size_t S = source_ids.size();
  std::vector<Var> emb(S);
  for (std::size_t i = 0; i < S; ++i)
    emb[i] = tape.row(pv.src_embed, static_cast<std::size_t>(source_ids[i]));
  Var zero = tape.constant(Tensor<T>({1, cfg.d_h}));
  std::vector<Var> hf(S), hb(S);
  LstmState<T> f{zero, zero};
  for (std::size_t i = 0; i < S; ++i) {
    f = lstm_step(tape, pv.enc_fwd_w, pv.enc_fwd_b, emb[i], f, cfg.d_h);
    hf[i] = f.h;
  }
  LstmState<T> b{zero, zero};
  for (std::size_t i = S; i-- > 0;) {
    b = lstm_step(tape, pv.enc_bwd_w, pv.enc_bwd_b, emb[i], b, cfg.d_h);
    hb[i] = b.h;
  }
  std::vector<Var> rows(S);
  for (std::size_t i = 0; i < S; ++i) rows[i] = tape.concat({hf[i], hb[i]});
  return tape.stack_rows(rows);
}

struct Attention {
  Var alpha;  // [1 x S]
  Var ctx;    // [1 x 2*d_h]
};

// alpha_i = softmax_i(s W_a h_i); ctx = sum_i alpha_i h_i.
template <typename T>
Attention attend(Tape<T>& tape, Var w_a, Var s, Var H) {
  Var proj = tape.matmul(s, w_a);
  Var scores = tape.matmul_nt(proj, H);
  Var alpha = tape.softmax(scores);
  Var ctx = tape.matmul(alpha, H);
  return {alpha, ctx};
}

// softmax(W_v tanh(W_u [s ⊕ ctx]) + b_v) over the target vocabulary.
template <typename T>
Var output_distribution(Tape<T>& tape, Var w_u, Var b_u, Var w_v, Var b_v,
                        Var s, Var ctx) {
  Var sc = tape.concat({s, ctx});
  Var ut = tape.tanh(tape.add(tape.matmul_nt(sc, w_u), b_u));
  return tape.softmax(tape.add(tape.matmul_nt(ut, w_v), b_v));
}

// sigmoid(W_c [s ⊕ ctx ⊕ e_prev] + b_c), a [1x1] gate.
template <typename T>
Var copy_gate(Tape<T>& tape, Var w_c, Var b_c, Var s, Var ctx, Var e_prev) {
  Var sce = tape.concat({s, ctx, e_prev});
  return tape.sigmoid(tape.add(tape.matmul_nt(sce, w_c), b_c));
}

// P_copy(v) = sum of attention over every source position holding v;
// realized over the target+extended id space of the example.
template <typename T>
Var copy_distribution(Tape<T>& tape, Var alpha,
                      const std::vector<int>& copy_ids, std::size_t width) {
  std::vector<std::size_t> map(copy_ids.begin(), copy_ids.end());
  return tape.scatter_sum(alpha, std::move(map), width);
}

// P = p_gen * P_target (zero-padded to width) + (1 - p_gen) * P_copy.
template <typename T>
Var mix_distributions(Tape<T>& tape, Var p_gen, Var p_target, Var p_copy,
                      std::size_t width) {
  Var gen = tape.smul(p_gen, tape.pad(p_target, width));
  Var copy = tape.smul(tape.affine(p_gen, T(-1), T(1)), p_copy);
  return tape.add(gen, copy);
}

// Distributions one attention head produces at one timestep.
struct HeadDistributions {
  Var alpha;
  Var ctx;
  Var p_target;  // [1 x v_tgt]
  Var p_gen;     // [1 x 1]
  Var p_copy;    // [1 x width]
  Var mixture;   // [1 x width]
};

template <typename T>
HeadDistributions head_distributions(Tape<T>& tape, const ParamVars<T>& pv,
                                     Var H, Var s, Var e_prev, std::size_t k,
                                     const std::vector<int>& copy_ids,
                                     std::size_t width) {
  if (k >= pv.attn.size())
    throw DimError("attention head index " + std::to_string(k) +
                   " out of range");
  Attention at = attend(tape, pv.attn[k], s, H);
  HeadDistributions hd;
  hd.alpha = at.alpha;
  hd.ctx = at.ctx;
  hd.p_target =
      output_distribution(tape, pv.w_u, pv.b_u, pv.w_v, pv.b_v, s, at.ctx);
  hd.p_gen = copy_gate(tape, pv.w_c, pv.b_c, s, at.ctx, e_prev);
  hd.p_copy = copy_distribution(tape, at.alpha, copy_ids, width);
  hd.mixture = mix_distributions(tape, hd.p_gen, hd.p_target, hd.p_copy, width);
  return hd;
}

// Embedding of a previous target token; extended ids fall back to UNK.
template <typename T>
Var target_embedding(Tape<T>& tape, const ParamVars<T>& pv,
                     const ModelConfig& cfg, int id) {
  std::size_t row = static_cast<std::size_t>(id) < cfg.v_tgt
                        ? static_cast<std::size_t>(id)
                        : static_cast<std::size_t>(Vocabulary::kUnk);
  return tape.row(pv.tgt_embed, row);
}

template <typename T>
struct DecoderStep {
  LstmState<T> state;
  std::vector<HeadDistributions> heads;  // K+1 entries sharing state
};

template <typename T>
LstmState<T> initial_decoder_state(Tape<T>& tape, const ModelConfig& cfg) {
  Var zero = tape.constant(Tensor<T>({1, cfg.d_s}));
  return {zero, zero};
}

// One teacher-forced pass. Step t consumes the gold token at position t-1
// and yields K+1 head distributions; every head shares the decoder state.
template <typename T>
std::vector<DecoderStep<T>> forward_teacher_forced(
    Tape<T>& tape, const ParamVars<T>& pv, const ModelConfig& cfg,
    const LinearizedExample& lin) {
  if (lin.target_ids.size() < 2)
    throw DataError("target must hold BOS and at least one scored token");
  Var H = encode(tape, pv, cfg, lin.source_ids);
  std::size_t width = cfg.v_tgt + lin.n_ext();
  std::vector<DecoderStep<T>> steps;
  LstmState<T> state = initial_decoder_state(tape, cfg);
  for (std::size_t t = 1; t < lin.target_ids.size(); ++t) {
    Var e_prev = target_embedding(tape, pv, cfg, lin.target_ids[t - 1]);
    state = lstm_step(tape, pv.dec_w, pv.dec_b, e_prev, state, cfg.d_s);
    DecoderStep<T> step;
    step.state = state;
    for (std::size_t k = 0; k <= cfg.K; ++k)
      step.heads.push_back(head_distributions(tape, pv, H, state.h, e_prev,
                                              k, lin.copy_ids, width));
    steps.push_back(std::move(step));
  }
  return steps;
}

}  // namespace kpgen
