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

#ifndef KPGEN_OBJECTIVES_HPP_
#define KPGEN_OBJECTIVES_HPP_

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "kpgen/corpus.hpp"
#include "kpgen/error.hpp"
#include "kpgen/model.hpp"
#include "kpgen/tape.hpp"

namespace kpgen {

// Probabilities are clamped to [kProbEps, 1 - kProbEps] before any log.
inline constexpr double kProbEps = 1e-7;

// Decay weight for the k-step-ahead loss terms. gamma(0) == 1.0 exactly.
inline double gamma_weight(std::size_t k) { return 1.0 / static_cast<double>(k + 1); }

struct LossConfig {
  double lambda_target = 15.0;
  double lambda_copy = 18.0;
  std::size_t k_ahead = 2;
  // When set, every reported component is divided by the scored token count.
  bool per_token_mean = false;

  void validate() const {
    if (lambda_target < 0.0 || lambda_copy < 0.0) {
      throw ConfigError("loss weights must be non-negative");
    }
  }
};

// Penalty id sets per scored step t (1-based) and look-ahead k.
// target_sets[t - 1][k] and copy_sets[t - 1][k] are sorted ascending and
// empty whenever t + k exceeds the scored length.
struct CandidateSets {
  std::size_t k_ahead = 0;
  std::vector<std::vector<std::vector<int>>> target_sets;
  std::vector<std::vector<std::vector<int>>> copy_sets;
};

// Builds the penalty sets for one linearized target sequence.
// target_ids frames the scored tokens as [BOS, y_1, ..., y_L] with y_L == EOS.
// The target set at (t, k) holds the ids of previously scored gold tokens
// {y_1..y_{t+k-1}} minus {y_{t+k}}, keeping only real target-vocabulary ids
// (reserved ids and extended ids never qualify). The copy set is the subset
// of the target set whose ids also occur in the source (copyable ids).
inline CandidateSets build_candidates(const std::vector<int>& target_ids,
                                      const std::unordered_set<int>& copyable_ids,
                                      std::size_t k_ahead, int target_vocab_size) {
  if (target_ids.size() < 2) throw DataError("target frame needs at least BOS and EOS");
  const std::size_t scored = target_ids.size() - 1;
  CandidateSets out;
  out.k_ahead = k_ahead;
  out.target_sets.assign(scored, std::vector<std::vector<int>>(k_ahead + 1));
  out.copy_sets.assign(scored, std::vector<std::vector<int>>(k_ahead + 1));
  // prefix holds qualifying ids from y_1..y_{p-1} while p sweeps the frame.
  std::set<int> prefix;
  for (std::size_t t = 1; t <= scored; ++t) {
    for (std::size_t k = 0; k <= k_ahead; ++k) {
      const std::size_t p = t + k;
      if (p > scored) break;
      // Rebuild the prefix set for this (t, k); the sweep below keeps this
      // O(L) amortized per row because k is small.
      prefix.clear();
      for (std::size_t i = 1; i < p; ++i) {
        const int id = target_ids[i];
        if (id >= Vocabulary::kNumReserved && id < target_vocab_size) prefix.insert(id);
      }
      prefix.erase(target_ids[p]);
      auto& tgt = out.target_sets[t - 1][k];
      auto& cpy = out.copy_sets[t - 1][k];
      tgt.assign(prefix.begin(), prefix.end());
      for (int id : tgt) {
        if (copyable_ids.count(id)) cpy.push_back(id);
      }
    }
  }
  return out;
}

// Convenience wrapper deriving copyable ids from the example's copy map.
inline CandidateSets build_candidates(const LinearizedExample& lin, std::size_t k_ahead,
                                      int target_vocab_size) {
  std::unordered_set<int> copyable(lin.copy_ids.begin(), lin.copy_ids.end());
  return build_candidates(lin.target_ids, copyable, k_ahead, target_vocab_size);
}

// Loss nodes for one example. Component values satisfy
//   total == mle + lambda_target * target_ul + lambda_copy * copy_ul
// exactly in 64-bit arithmetic. per_k vectors hold the gamma-weighted
// contribution of each look-ahead offset before any normalization.
template <typename T>
struct LossVars {
  Var total = -1;
  Var mle = -1;
  Var target_ul = -1;
  Var copy_ul = -1;
  std::vector<Var> mle_per_k;
  std::vector<Var> target_ul_per_k;
  std::vector<Var> copy_ul_per_k;
  std::size_t scored_tokens = 0;
};

namespace detail {

// -log(clamp(p)) for one picked probability.
template <typename T>
Var neg_log_prob(Tape<T>& tape, Var prob_scalar) {
  Var clamped = tape.clamp(prob_scalar, static_cast<T>(kProbEps), static_cast<T>(1.0 - kProbEps));
  return tape.affine(tape.log(clamped), static_cast<T>(-1), static_cast<T>(0));
}

// -sum_c log(1 - clamp(p_c)) over the candidate ids of one (t, k) term.
template <typename T>
Var neg_log_one_minus(Tape<T>& tape, Var dist, const std::vector<int>& candidates) {
  std::vector<std::size_t> idx(candidates.begin(), candidates.end());
  Var picked = tape.gather(dist, std::move(idx));
  Var clamped = tape.clamp(picked, static_cast<T>(kProbEps), static_cast<T>(1.0 - kProbEps));
  Var one_minus = tape.affine(clamped, static_cast<T>(-1), static_cast<T>(1));
  return tape.affine(tape.sum(tape.log(one_minus)), static_cast<T>(-1), static_cast<T>(0));
}

template <typename T>
Var sum_or_zero(Tape<T>& tape, const std::vector<Var>& terms) {
  if (terms.empty()) return tape.constant(Tensor<T>::scalar(0));
  return tape.sum_vars(std::span<const Var>(terms));
}

}  // namespace detail

// Next-token negative log likelihood over the k = 0 mixture.
// steps must align with target_ids: steps[t - 1] scored target_ids[t].
template <typename T>
Var mle_loss(Tape<T>& tape, const std::vector<DecoderStep<T>>& steps,
             const std::vector<int>& target_ids) {
  if (target_ids.size() < 2) throw DataError("target frame needs at least BOS and EOS");
  if (steps.size() != target_ids.size() - 1) {
    throw DimError("decoder steps do not match scored token count");
  }
  std::vector<Var> terms;
  terms.reserve(steps.size());
  for (std::size_t t = 1; t < target_ids.size(); ++t) {
    const auto& heads = steps[t - 1].heads;
    if (heads.empty()) throw ConfigError("decoder step carries no heads");
    Var p = tape.pick(heads[0].mixture, target_ids[t]);
    terms.push_back(detail::neg_log_prob(tape, p));
  }
  return detail::sum_or_zero(tape, terms);
}

// -sum_c log(1 - P_target(c)) for one step's target distribution.
template <typename T>
Var target_ul_loss_at(Tape<T>& tape, Var p_target, const std::vector<int>& candidates) {
  if (candidates.empty()) return tape.constant(Tensor<T>::scalar(0));
  return detail::neg_log_one_minus(tape, p_target, candidates);
}

// -sum_c log(1 - P_copy(c)) for one step's copy distribution.
template <typename T>
Var copy_ul_loss_at(Tape<T>& tape, Var p_copy, const std::vector<int>& candidates) {
  if (candidates.empty()) return tape.constant(Tensor<T>::scalar(0));
  return detail::neg_log_one_minus(tape, p_copy, candidates);
}

// Full per-example training loss. Head k of step t scores target_ids[t + k];
// terms with t + k beyond the scored length are skipped. Look-ahead sums are
// weighted by gamma_weight(k), so with k_ahead == 0 the mle component equals
// mle_loss bit for bit, and with zero lambdas total equals mle bit for bit.
template <typename T>
LossVars<T> kstep_losses(Tape<T>& tape, const std::vector<DecoderStep<T>>& steps,
                         const std::vector<int>& target_ids, const CandidateSets& candidates,
                         const LossConfig& cfg) {
  cfg.validate();
  if (target_ids.size() < 2) throw DataError("target frame needs at least BOS and EOS");
  const std::size_t scored = target_ids.size() - 1;
  if (steps.size() != scored) throw DimError("decoder steps do not match scored token count");
  if (candidates.k_ahead < cfg.k_ahead || candidates.target_sets.size() != scored) {
    throw ConfigError("candidate sets do not cover the configured look-ahead");
  }
  for (const auto& step : steps) {
    if (step.heads.size() != cfg.k_ahead + 1) {
      throw ConfigError("decoder head count does not match configured look-ahead");
    }
  }

  LossVars<T> out;
  out.scored_tokens = scored;
  std::vector<Var> mle_k, tul_k, cul_k;
  for (std::size_t k = 0; k <= cfg.k_ahead; ++k) {
    std::vector<Var> mle_terms, tul_terms, cul_terms;
    for (std::size_t t = 1; t <= scored; ++t) {
      if (t + k > scored) break;
      const auto& head = steps[t - 1].heads[k];
      Var gold = tape.pick(head.mixture, target_ids[t + k]);
      mle_terms.push_back(detail::neg_log_prob(tape, gold));
      const auto& tgt_set = candidates.target_sets[t - 1][k];
      if (!tgt_set.empty()) {
        tul_terms.push_back(detail::neg_log_one_minus(tape, head.p_target, tgt_set));
      }
      const auto& cpy_set = candidates.copy_sets[t - 1][k];
      if (!cpy_set.empty()) {
        cul_terms.push_back(detail::neg_log_one_minus(tape, head.p_copy, cpy_set));
      }
    }
    const T g = static_cast<T>(gamma_weight(k));
    mle_k.push_back(tape.affine(detail::sum_or_zero(tape, mle_terms), g, static_cast<T>(0)));
    tul_k.push_back(tape.affine(detail::sum_or_zero(tape, tul_terms), g, static_cast<T>(0)));
    cul_k.push_back(tape.affine(detail::sum_or_zero(tape, cul_terms), g, static_cast<T>(0)));
  }
  out.mle_per_k = mle_k;
  out.target_ul_per_k = tul_k;
  out.copy_ul_per_k = cul_k;

  out.mle = detail::sum_or_zero(tape, mle_k);
  out.target_ul = detail::sum_or_zero(tape, tul_k);
  out.copy_ul = detail::sum_or_zero(tape, cul_k);
  if (cfg.per_token_mean) {
    const T inv = static_cast<T>(1) / static_cast<T>(scored);
    out.mle = tape.affine(out.mle, inv, static_cast<T>(0));
    out.target_ul = tape.affine(out.target_ul, inv, static_cast<T>(0));
    out.copy_ul = tape.affine(out.copy_ul, inv, static_cast<T>(0));
  }
  std::vector<Var> total_terms = {
      out.mle,
      tape.affine(out.target_ul, static_cast<T>(cfg.lambda_target), static_cast<T>(0)),
      tape.affine(out.copy_ul, static_cast<T>(cfg.lambda_copy), static_cast<T>(0))};
  out.total = tape.sum_vars(std::span<const Var>(total_terms));
  return out;
}

// Plain 64-bit copies of the loss component values for logging.
struct LossBreakdown {
  double total = 0;
  double mle = 0;
  double target_ul = 0;
  double copy_ul = 0;
  std::vector<double> mle_per_k;
  std::vector<double> target_ul_per_k;
  std::vector<double> copy_ul_per_k;
  std::size_t scored_tokens = 0;
};

template <typename T>
LossBreakdown read_breakdown(const Tape<T>& tape, const LossVars<T>& vars) {
  LossBreakdown b;
  b.total = static_cast<double>(tape.value(vars.total).at(0, 0));
  b.mle = static_cast<double>(tape.value(vars.mle).at(0, 0));
  b.target_ul = static_cast<double>(tape.value(vars.target_ul).at(0, 0));
  b.copy_ul = static_cast<double>(tape.value(vars.copy_ul).at(0, 0));
  for (Var v : vars.mle_per_k) b.mle_per_k.push_back(static_cast<double>(tape.value(v).at(0, 0)));
  for (Var v : vars.target_ul_per_k) {
    b.target_ul_per_k.push_back(static_cast<double>(tape.value(v).at(0, 0)));
  }
  for (Var v : vars.copy_ul_per_k) {
    b.copy_ul_per_k.push_back(static_cast<double>(tape.value(v).at(0, 0)));
  }
  b.scored_tokens = vars.scored_tokens;
  return b;
}

}  // namespace kpgen

#endif  // KPGEN_OBJECTIVES_HPP_
