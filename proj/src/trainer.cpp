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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpgen/decode.hpp"
#include "kpgen/error.hpp"
#include "kpgen/metrics.hpp"
#include "kpgen/trainer.hpp"

namespace kpgen {
namespace {

using nlohmann::json;

// Parameter values, optimizer state, and rng position frozen at one
// evaluation; the returned checkpoint is built from the best of these.
struct Snapshot {
  Parameters<double> params;
  bool has_adam = false;
  std::vector<Tensor<double>> adam_m;
  std::vector<Tensor<double>> adam_v;
  std::uint64_t adam_steps = 0;
  std::string rng_state;
  double f1 = 0.0;
};

Snapshot take_snapshot(Parameters<double>& params, const Adam<double>* adam, const Rng& rng,
                       double f1) {
  Snapshot snap;
  snap.params = params;
  if (adam != nullptr && adam->steps() > 0) {
    snap.has_adam = true;
    snap.adam_m = adam->first_moments();
    snap.adam_v = adam->second_moments();
    snap.adam_steps = adam->steps();
  }
  snap.rng_state = rng.serialize();
  snap.f1 = f1;
  return snap;
}

Checkpoint checkpoint_from_snapshot(const Snapshot& snap, const TrainConfig& cfg,
                                    const Vocabulary& src_vocab, const Vocabulary& tgt_vocab) {
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.src_vocab = src_vocab;
  ckpt.tgt_vocab = tgt_vocab;
  Parameters<double> params = snap.params;
  params.visit([&ckpt](const std::string& name, Tensor<double>& t) {
    ckpt.tensors.emplace_back(name, t);
  });
  ckpt.has_adam = snap.has_adam;
  ckpt.adam_steps = snap.adam_steps;
  ckpt.adam_m = snap.adam_m;
  ckpt.adam_v = snap.adam_v;
  ckpt.rng_state = snap.rng_state;
  ckpt.best_f1 = snap.f1 < 0.0 ? 0.0 : snap.f1;
  return ckpt;
}

void emit(std::ostream* log, const json& event) {
  if (log != nullptr) *log << event.dump() << '\n';
}

// Mean per-record F1@M of greedy decodes against the gold keyphrases.
double validation_f1(Parameters<double>& params, const ModelConfig& cfg,
                     const std::vector<LinearizedExample>& lins,
                     const std::vector<const Example*>& examples, const Vocabulary& tgt_vocab,
                     std::size_t max_len) {
  if (lins.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < lins.size(); ++i) {
    Prediction pred = greedy_decode(params, cfg, lins[i], tgt_vocab, max_len);
    sum += quality_at_m(pred.keyphrases, examples[i]->keyphrases).f1;
  }
  return sum / static_cast<double>(lins.size());
}

}  // namespace

BatchGraph build_batch_loss(Tape<double>& tape, const ParamVars<double>& pv,
                            const ModelConfig& cfg, const LossConfig& loss,
                            const std::vector<const LinearizedExample*>& batch) {
  if (batch.empty()) throw DataError("batch has no examples");
  BatchGraph graph;
  std::vector<Var> totals;
  for (const LinearizedExample* lin : batch) {
    std::vector<DecoderStep<double>> steps = forward_teacher_forced(tape, pv, cfg, *lin);
    CandidateSets cands = build_candidates(*lin, loss.k_ahead, cfg.v_tgt);
    LossVars<double> vars = kstep_losses(tape, steps, lin->target_ids, cands, loss);
    graph.scored_tokens += vars.scored_tokens;
    totals.push_back(vars.total);
    graph.per_example.push_back(std::move(vars));
  }
  graph.loss_sum = totals.size() == 1 ? totals.front()
                                      : tape.sum_vars(std::span<const Var>(totals));
  return graph;
}

namespace {

// Canonical config image for the resume equality check. File locations may
// move between runs without changing what is being trained, so they are
// blanked before comparison.
std::string config_fingerprint(const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.train_path.clear();
  c.valid_path.clear();
  c.output_dir.clear();
  return train_config_to_json(c);
}

}  // namespace

TrainResult train_on(const TrainConfig& cfg, const std::vector<Example>& train_examples,
                     const std::vector<Example>& valid_examples, std::ostream* log,
                     const Checkpoint* resume) {
  cfg.validate();
  if (train_examples.empty()) throw DataError("training corpus is empty");

  Vocabulary src_vocab, tgt_vocab;
  if (resume == nullptr) {
    src_vocab = build_source_vocab(train_examples, cfg.model.v_src);
    tgt_vocab = build_target_vocab(train_examples, cfg.model.v_tgt);
  } else {
    // Vocabularies are part of the model; rebuilding them from the current
    // corpus could silently renumber every id.
    src_vocab = resume->src_vocab;
    tgt_vocab = resume->tgt_vocab;
  }
  ModelConfig model = cfg.model;
  model.v_src = static_cast<std::size_t>(src_vocab.size());
  model.v_tgt = static_cast<std::size_t>(tgt_vocab.size());
  TrainConfig resolved = cfg;
  resolved.model = model;

  if (resume != nullptr && config_fingerprint(resolved) != config_fingerprint(resume->config)) {
    throw ConfigError("resume rejected: run config differs from the checkpoint's");
  }

  std::vector<LinearizedExample> train_lins;
  train_lins.reserve(train_examples.size());
  for (const Example& ex : train_examples) {
    train_lins.push_back(linearize(ex, src_vocab, tgt_vocab, cfg.max_src_len));
  }
  std::vector<LinearizedExample> valid_lins;
  std::vector<const Example*> valid_ptrs;
  for (const Example& ex : valid_examples) {
    valid_lins.push_back(linearize(ex, src_vocab, tgt_vocab, cfg.max_src_len));
    valid_ptrs.push_back(&ex);
  }

  Rng rng(cfg.seed);
  Parameters<double> params =
      resume == nullptr ? Parameters<double>::init(model, rng) : checkpoint_parameters(*resume);
  Adam<double> adam(cfg.adam);
  adam.init(params.tensors());
  if (resume != nullptr) {
    rng.deserialize(resume->rng_state);
    if (resume->has_adam) adam.restore(resume->adam_m, resume->adam_v, resume->adam_steps);
  }

  TrainResult result;
  result.best_f1 = resume == nullptr ? -1.0 : resume->best_f1;
  Snapshot best = resume == nullptr ? take_snapshot(params, nullptr, rng, -1.0)
                                    : take_snapshot(params, &adam, rng, resume->best_f1);
  std::size_t stale_evals = 0;
  bool stop = false;

  emit(log, json{{"event", "start"},
                 {"train_examples", train_examples.size()},
                 {"valid_examples", valid_examples.size()},
                 {"v_src", model.v_src},
                 {"v_tgt", model.v_tgt},
                 {"parameters", params.count()},
                 {"resumed", resume != nullptr}});

  auto evaluate = [&](std::size_t epoch) {
    if (valid_lins.empty()) return;
    const double f1 = validation_f1(params, model, valid_lins, valid_ptrs, tgt_vocab,
                                    cfg.decode_max_len);
    result.eval_f1.push_back(f1);
    const bool improved = f1 > result.best_f1;
    if (improved) {
      result.best_f1 = f1;
      best = take_snapshot(params, &adam, rng, f1);
      stale_evals = 0;
    } else {
      ++stale_evals;
      if (stale_evals >= cfg.patience) stop = true;
    }
    emit(log, json{{"event", "eval"},
                   {"epoch", epoch},
                   {"step", result.steps_run},
                   {"f1", f1},
                   {"best_f1", result.best_f1},
                   {"improved", improved}});
  };

  std::vector<std::size_t> order(train_lins.size());

  for (std::size_t epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
    // Each epoch's order depends only on the rng position, not on earlier
    // epochs' permutations, so a resumed run replays the same batches a
    // straight-through run would have seen.
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size() && !stop; start += cfg.batch_size) {
      std::vector<const LinearizedExample*> batch;
      for (std::size_t i = start; i < std::min(start + cfg.batch_size, order.size()); ++i) {
        batch.push_back(&train_lins[order[i]]);
      }

      Tape<double> tape;
      ParamVars<double> pv = load_params(tape, params, true);
      BatchGraph graph = build_batch_loss(tape, pv, model, cfg.loss, batch);
      const double loss_value = tape.value(graph.loss_sum)[0];
      if (!std::isfinite(loss_value)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                           " step " + std::to_string(result.steps_run));
      }
      tape.backward(graph.loss_sum);

      std::vector<Tensor<double>> grads;
      grads.reserve(pv.vars().size());
      for (Var v : pv.vars()) grads.push_back(tape.grad(v));
      std::vector<Tensor<double>*> grad_ptrs;
      for (Tensor<double>& g : grads) grad_ptrs.push_back(&g);
      double grad_norm = 0.0;
      if (cfg.clip_norm > 0.0) {
        grad_norm = clip_global_norm(grad_ptrs, cfg.clip_norm);
      }
      std::vector<const Tensor<double>*> grad_const(grad_ptrs.begin(), grad_ptrs.end());
      adam.step(params.tensors(), grad_const);

      ++result.steps_run;
      result.step_loss.push_back(loss_value);

      LossBreakdown sums;
      for (const LossVars<double>& vars : graph.per_example) {
        const LossBreakdown b = read_breakdown(tape, vars);
        sums.total += b.total;
        sums.mle += b.mle;
        sums.target_ul += b.target_ul;
        sums.copy_ul += b.copy_ul;
      }
      emit(log, json{{"event", "step"},
                     {"epoch", epoch},
                     {"step", result.steps_run},
                     {"examples", batch.size()},
                     {"loss", loss_value},
                     {"mle", sums.mle},
                     {"target_ul", sums.target_ul},
                     {"copy_ul", sums.copy_ul},
                     {"grad_norm", grad_norm}});

      if (cfg.eval_every_steps > 0 && result.steps_run % cfg.eval_every_steps == 0) {
        evaluate(epoch);
      }
    }
    if (!stop && cfg.eval_every_steps == 0) evaluate(epoch);
    ++result.epochs_run;
  }

  // Without a validation signal the final state is the retained one.
  if (result.eval_f1.empty()) best = take_snapshot(params, &adam, rng, -1.0);

  result.best = checkpoint_from_snapshot(best, resolved, src_vocab, tgt_vocab);
  result.best_f1 = result.best.best_f1;
  emit(log, json{{"event", "done"},
                 {"epochs", result.epochs_run},
                 {"steps", result.steps_run},
                 {"best_f1", result.best_f1}});

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    save_checkpoint(cfg.output_dir + "/best.ckpt", result.best);
  }
  return result;
}

TrainResult train(const TrainConfig& cfg, std::ostream* log, const Checkpoint* resume) {
  cfg.validate();
  const std::vector<Example> train_examples = read_examples_jsonl(cfg.train_path);
  std::vector<Example> valid_examples;
  if (!cfg.valid_path.empty()) valid_examples = read_examples_jsonl(cfg.valid_path);
  return train_on(cfg, train_examples, valid_examples, log, resume);
}

}  // namespace kpgen
