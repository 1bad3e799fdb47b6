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

#ifndef KPGEN_TRAINER_HPP_
#define KPGEN_TRAINER_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "kpgen/adam.hpp"
#include "kpgen/corpus.hpp"
#include "kpgen/model.hpp"
#include "kpgen/objectives.hpp"
#include "kpgen/tensor.hpp"

namespace kpgen {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t max_epochs = 50;
  // Early stopping: abort after this many evaluations without improvement.
  std::size_t patience = 3;
  std::uint64_t seed = 1;
  // 0 evaluates once per epoch; otherwise every N optimizer steps.
  std::size_t eval_every_steps = 0;
  // Source truncation during linearization; 0 keeps full sources.
  std::size_t max_src_len = 0;
  // Length cap for validation decoding.
  std::size_t decode_max_len = 40;
  // Gradient clipping by global L2 norm; 0 disables.
  double clip_norm = 5.0;

  // model.v_src / model.v_tgt act as vocabulary caps here; the trainer
  // shrinks them to the actual built vocabulary sizes.
  ModelConfig model;
  LossConfig loss;
  AdamConfig adam;

  std::string train_path;
  std::string valid_path;
  // Destination for best.ckpt; empty writes no files.
  std::string output_dir;

  void validate() const;
};

// Exact JSON round trip for TrainConfig; unknown keys are config errors.
std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

inline constexpr const char* kCheckpointVersion = "kpgen.ckpt.v1";

// Self-contained training artifact. Tensors follow the canonical parameter
// order; Adam moments, when present, align with them one to one.
struct Checkpoint {
  std::string version = kCheckpointVersion;
  TrainConfig config;  // echo with resolved vocabulary sizes
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  std::vector<std::pair<std::string, Tensor<double>>> tensors;
  bool has_adam = false;
  std::uint64_t adam_steps = 0;
  std::vector<Tensor<double>> adam_m;
  std::vector<Tensor<double>> adam_v;
  std::string rng_state;
  double best_f1 = 0.0;
};

// Single-file container: magic "KPGC", a little-endian u64 manifest byte
// length, a JSON manifest (version, config, vocabularies, tensor index,
// optimizer block, rng, best f1), then raw little-endian IEEE-754 32-bit
// tensor blocks in manifest order. save(load(f)) reproduces f byte for
// byte; truncation, bad magic, version or shape mismatches are DataErrors.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds model parameters from checkpoint tensors (names and shapes must
// match the stored model config exactly).
Parameters<double> checkpoint_parameters(const Checkpoint& ckpt);

// Rejects a checkpoint whose stored model shape differs from the one the
// caller is about to run (look-ahead K included).
void require_model_match(const Checkpoint& ckpt, const ModelConfig& cfg);

// Per-example loss graphs accumulated on one shared tape. The batch loss
// is the plain sum of per-example totals, so it equals the unbatched
// per-sequence losses summed, exactly.
struct BatchGraph {
  Var loss_sum = -1;
  std::vector<LossVars<double>> per_example;
  std::size_t scored_tokens = 0;
};

BatchGraph build_batch_loss(Tape<double>& tape, const ParamVars<double>& pv,
                            const ModelConfig& cfg, const LossConfig& loss,
                            const std::vector<const LinearizedExample*>& batch);

struct TrainResult {
  Checkpoint best;
  double best_f1 = 0.0;
  std::size_t epochs_run = 0;
  std::size_t steps_run = 0;
  // Batch loss sum per optimizer step, for reproducibility checks.
  std::vector<double> step_loss;
  // Validation F1@M per evaluation, in evaluation order.
  std::vector<double> eval_f1;
};

// Teacher-forced training with Adam and early stopping on validation F1@M
// (greedy decoding, stemmed exact match). Emits line-JSON events to log
// when provided. Returns the best-scoring checkpoint (initialization when
// no step or evaluation happened).
//
// When resume is given, parameters, optimizer state, rng position, and
// vocabularies come from the checkpoint instead of a fresh initialization.
// The run config must then match the stored one exactly (vocab sizes taken
// as resolved); any difference is a ConfigError. The best score restarts
// from the stored one.
TrainResult train_on(const TrainConfig& cfg, const std::vector<Example>& train_examples,
                     const std::vector<Example>& valid_examples, std::ostream* log = nullptr,
                     const Checkpoint* resume = nullptr);

// Reads the corpora from cfg.train_path / cfg.valid_path first.
TrainResult train(const TrainConfig& cfg, std::ostream* log = nullptr,
                  const Checkpoint* resume = nullptr);

}  // namespace kpgen

#endif  // KPGEN_TRAINER_HPP_
