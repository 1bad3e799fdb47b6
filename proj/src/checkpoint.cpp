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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpgen/error.hpp"
#include "kpgen/trainer.hpp"

namespace kpgen {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'K', 'P', 'G', 'C'};

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown key `" + it.key() + "` in " + where);
    }
  }
}

json model_to_json(const ModelConfig& m) {
  return json{{"d_emb", m.d_emb}, {"d_h", m.d_h},       {"d_s", m.d_s},
              {"k_ahead", m.K},   {"v_src", m.v_src},   {"v_tgt", m.v_tgt}};
}

ModelConfig model_from_json(const json& j) {
  reject_unknown_keys(j, {"d_emb", "d_h", "d_s", "k_ahead", "v_src", "v_tgt"}, "model config");
  ModelConfig m;
  m.d_emb = j.value("d_emb", m.d_emb);
  m.d_h = j.value("d_h", m.d_h);
  m.d_s = j.value("d_s", m.d_s);
  m.K = j.value("k_ahead", m.K);
  m.v_src = j.value("v_src", m.v_src);
  m.v_tgt = j.value("v_tgt", m.v_tgt);
  return m;
}

json loss_to_json(const LossConfig& l) {
  return json{{"lambda_target", l.lambda_target},
              {"lambda_copy", l.lambda_copy},
              {"k_ahead", l.k_ahead},
              {"per_token_mean", l.per_token_mean}};
}

LossConfig loss_from_json(const json& j) {
  reject_unknown_keys(j, {"lambda_target", "lambda_copy", "k_ahead", "per_token_mean"},
                      "loss config");
  LossConfig l;
  l.lambda_target = j.value("lambda_target", l.lambda_target);
  l.lambda_copy = j.value("lambda_copy", l.lambda_copy);
  l.k_ahead = j.value("k_ahead", l.k_ahead);
  l.per_token_mean = j.value("per_token_mean", l.per_token_mean);
  return l;
}

json adam_to_json(const AdamConfig& a) {
  return json{{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

AdamConfig adam_from_json(const json& j) {
  reject_unknown_keys(j, {"lr", "beta1", "beta2", "eps"}, "adam config");
  AdamConfig a;
  a.lr = j.value("lr", a.lr);
  a.beta1 = j.value("beta1", a.beta1);
  a.beta2 = j.value("beta2", a.beta2);
  a.eps = j.value("eps", a.eps);
  return a;
}

json train_to_json(const TrainConfig& cfg) {
  return json{{"batch_size", cfg.batch_size},
              {"max_epochs", cfg.max_epochs},
              {"patience", cfg.patience},
              {"seed", cfg.seed},
              {"eval_every_steps", cfg.eval_every_steps},
              {"max_src_len", cfg.max_src_len},
              {"decode_max_len", cfg.decode_max_len},
              {"clip_norm", cfg.clip_norm},
              {"model", model_to_json(cfg.model)},
              {"loss", loss_to_json(cfg.loss)},
              {"adam", adam_to_json(cfg.adam)},
              {"train_path", cfg.train_path},
              {"valid_path", cfg.valid_path},
              {"output_dir", cfg.output_dir}};
}

TrainConfig train_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"batch_size", "max_epochs", "patience", "seed", "eval_every_steps",
                       "max_src_len", "decode_max_len", "clip_norm", "model", "loss", "adam",
                       "train_path", "valid_path", "output_dir"},
                      "train config");
  TrainConfig cfg;
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.eval_every_steps = j.value("eval_every_steps", cfg.eval_every_steps);
  cfg.max_src_len = j.value("max_src_len", cfg.max_src_len);
  cfg.decode_max_len = j.value("decode_max_len", cfg.decode_max_len);
  cfg.clip_norm = j.value("clip_norm", cfg.clip_norm);
  if (j.contains("model")) cfg.model = model_from_json(j.at("model"));
  if (j.contains("loss")) cfg.loss = loss_from_json(j.at("loss"));
  if (j.contains("adam")) cfg.adam = adam_from_json(j.at("adam"));
  cfg.train_path = j.value("train_path", cfg.train_path);
  cfg.valid_path = j.value("valid_path", cfg.valid_path);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  return cfg;
}

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

void put_f32_le(std::string& out, double x) {
  float f = static_cast<float>(x);
  std::uint32_t u;
  std::memcpy(&u, &f, sizeof(u));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

double get_f32_le(const std::string& in, std::size_t pos) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) {
    u |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  float f;
  std::memcpy(&f, &u, sizeof(f));
  return static_cast<double>(f);
}

json vocab_to_json(const Vocabulary& v) { return json(v.id_to_token); }

Vocabulary vocab_from_json(const json& j, const std::string& which) {
  if (!j.is_array()) throw DataError(which + " vocabulary must be an array");
  Vocabulary v;
  v.id_to_token.clear();
  v.token_to_id.clear();
  for (const auto& tok : j) {
    if (!tok.is_string()) throw DataError(which + " vocabulary entries must be strings");
    const std::string s = tok.get<std::string>();
    if (v.token_to_id.count(s)) {
      throw DataError(which + " vocabulary repeats token `" + s + "`");
    }
    v.token_to_id[s] = v.size();
    v.id_to_token.push_back(s);
  }
  if (v.size() < Vocabulary::kNumReserved) {
    throw DataError(which + " vocabulary is missing reserved entries");
  }
  return v;
}

struct BlobIndex {
  json entries = json::array();
  std::string blobs;

  void add(const std::string& name, const Tensor<double>& t) {
    json e;
    e["name"] = name;
    e["shape"] = t.shape;
    e["offset"] = blobs.size();
    e["bytes"] = t.numel() * 4;
    entries.push_back(std::move(e));
    for (double x : t.data) put_f32_le(blobs, x);
  }
};

Tensor<double> read_tensor(const json& entry, const std::string& blobs) {
  if (!entry.contains("name") || !entry.contains("shape") || !entry.contains("offset") ||
      !entry.contains("bytes")) {
    throw DataError("checkpoint tensor entry is missing fields");
  }
  const std::vector<std::size_t> shape = entry.at("shape").get<std::vector<std::size_t>>();
  const std::size_t offset = entry.at("offset").get<std::size_t>();
  const std::size_t bytes = entry.at("bytes").get<std::size_t>();
  if (shape.empty()) {
    throw DataError("checkpoint tensor `" + entry.at("name").get<std::string>() +
                    "` has an empty shape");
  }
  std::size_t numel = 1;
  for (std::size_t s : shape) numel *= s;
  if (bytes != numel * 4) {
    throw DataError("checkpoint tensor `" + entry.at("name").get<std::string>() +
                    "` declares " + std::to_string(bytes) + " bytes for shape product " +
                    std::to_string(numel));
  }
  if (offset + bytes > blobs.size()) {
    throw DataError("checkpoint is truncated inside tensor `" +
                    entry.at("name").get<std::string>() + "`");
  }
  std::vector<double> data(numel);
  for (std::size_t i = 0; i < numel; ++i) data[i] = get_f32_le(blobs, offset + 4 * i);
  return Tensor<double>(shape, std::move(data));
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (decode_max_len < 1) throw ConfigError("decode length cap must be at least 1");
  if (clip_norm < 0.0) throw ConfigError("clip norm must be non-negative");
  if (model.K != loss.k_ahead) {
    throw ConfigError("model look-ahead (" + std::to_string(model.K) +
                      ") must equal loss k_ahead (" + std::to_string(loss.k_ahead) + ")");
  }
  model.validate();
  loss.validate();
  if (adam.lr <= 0.0) throw ConfigError("learning rate must be positive");
}

std::string train_config_to_json(const TrainConfig& cfg) { return train_to_json(cfg).dump(2); }

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    return train_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  if (ckpt.has_adam &&
      (ckpt.adam_m.size() != ckpt.tensors.size() || ckpt.adam_v.size() != ckpt.tensors.size())) {
    throw DimError("optimizer moments do not align with parameter tensors");
  }
  BlobIndex index;
  for (const auto& [name, tensor] : ckpt.tensors) index.add(name, tensor);
  json optimizer;
  if (ckpt.has_adam) {
    json m_entries = json::array(), v_entries = json::array();
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
      index.add("adam_m." + ckpt.tensors[i].first, ckpt.adam_m[i]);
      m_entries.push_back(index.entries.back());
    }
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
      index.add("adam_v." + ckpt.tensors[i].first, ckpt.adam_v[i]);
      v_entries.push_back(index.entries.back());
    }
    optimizer = json{{"algorithm", "adam"},
                     {"steps", ckpt.adam_steps},
                     {"m", std::move(m_entries)},
                     {"v", std::move(v_entries)}};
  }

  json manifest;
  manifest["version"] = ckpt.version;
  manifest["config"] = train_to_json(ckpt.config);
  manifest["source_vocab"] = vocab_to_json(ckpt.src_vocab);
  manifest["target_vocab"] = vocab_to_json(ckpt.tgt_vocab);
  // Only the parameter tensors; optimizer moments index under "optimizer".
  json tensor_entries = json::array();
  for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) tensor_entries.push_back(index.entries[i]);
  manifest["tensors"] = std::move(tensor_entries);
  manifest["optimizer"] = optimizer;
  manifest["rng"] = ckpt.rng_state;
  manifest["best_f1"] = ckpt.best_f1;

  const std::string manifest_text = manifest.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_u64_le(out, manifest_text.size());
  out += manifest_text;
  out += index.blobs;

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot open " + path + " for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open checkpoint " + path);
  std::ostringstream buf;
  buf << file.rdbuf();
  const std::string bytes = buf.str();

  if (bytes.size() < sizeof(kMagic) + 8) throw DataError(path + ": truncated checkpoint header");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path + ": not a checkpoint file");
  }
  const std::uint64_t manifest_len = get_u64_le(bytes, sizeof(kMagic));
  const std::size_t manifest_start = sizeof(kMagic) + 8;
  if (manifest_start + manifest_len > bytes.size()) {
    throw DataError(path + ": truncated checkpoint manifest");
  }
  json manifest;
  try {
    manifest = json::parse(bytes.substr(manifest_start, manifest_len));
  } catch (const json::exception& e) {
    throw DataError(path + ": corrupt checkpoint manifest: " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("version")) {
    throw DataError(path + ": checkpoint manifest is missing its version");
  }
  Checkpoint ckpt;
  try {
    ckpt.version = manifest.at("version").get<std::string>();
    if (ckpt.version != kCheckpointVersion) {
      throw DataError(path + ": unsupported checkpoint version `" + ckpt.version +
                      "`, expected `" + kCheckpointVersion + "`");
    }
    try {
      ckpt.config = train_from_json(manifest.at("config"));
    } catch (const ConfigError& e) {
      throw DataError(path + ": bad config echo: " + e.what());
    }
    ckpt.src_vocab = vocab_from_json(manifest.at("source_vocab"), "source");
    ckpt.tgt_vocab = vocab_from_json(manifest.at("target_vocab"), "target");
    ckpt.rng_state = manifest.value("rng", std::string());
    ckpt.best_f1 = manifest.value("best_f1", 0.0);

    const std::string blobs = bytes.substr(manifest_start + manifest_len);
    if (!manifest.contains("tensors") || !manifest.at("tensors").is_array()) {
      throw DataError(path + ": checkpoint manifest has no tensor index");
    }
    for (const auto& entry : manifest.at("tensors")) {
      ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), read_tensor(entry, blobs));
    }
    const json& optimizer = manifest.at("optimizer");
    if (!optimizer.is_null()) {
      if (optimizer.value("algorithm", std::string()) != "adam") {
        throw DataError(path + ": unknown optimizer block");
      }
      ckpt.has_adam = true;
      ckpt.adam_steps = optimizer.value("steps", std::uint64_t(0));
      for (const auto& entry : optimizer.at("m")) {
        ckpt.adam_m.push_back(read_tensor(entry, blobs));
      }
      for (const auto& entry : optimizer.at("v")) {
        ckpt.adam_v.push_back(read_tensor(entry, blobs));
      }
      if (ckpt.adam_m.size() != ckpt.tensors.size() ||
          ckpt.adam_v.size() != ckpt.tensors.size()) {
        throw DataError(path + ": optimizer moments do not align with parameter tensors");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": corrupt checkpoint manifest: " + e.what());
  }
  return ckpt;
}

Parameters<double> checkpoint_parameters(const Checkpoint& ckpt) {
  Rng rng(0);
  Parameters<double> params = Parameters<double>::init(ckpt.config.model, rng);
  std::size_t i = 0;
  std::string mismatch;
  params.visit([&](const std::string& name, Tensor<double>& t) {
    if (!mismatch.empty()) return;
    if (i >= ckpt.tensors.size()) {
      mismatch = "checkpoint is missing tensor `" + name + "`";
      return;
    }
    const auto& [got_name, got] = ckpt.tensors[i++];
    if (got_name != name) {
      mismatch = "checkpoint tensor `" + got_name + "` where `" + name + "` was expected";
      return;
    }
    if (!t.same_shape(got)) {
      mismatch = "checkpoint tensor `" + name + "` has shape " + got.shape_str() +
                 ", expected " + t.shape_str();
      return;
    }
    t = got;
  });
  if (mismatch.empty() && i != ckpt.tensors.size()) {
    mismatch = "checkpoint holds " + std::to_string(ckpt.tensors.size()) +
               " tensors, model expects " + std::to_string(i);
  }
  if (!mismatch.empty()) throw DataError(mismatch);
  return params;
}

void require_model_match(const Checkpoint& ckpt, const ModelConfig& cfg) {
  const ModelConfig& got = ckpt.config.model;
  auto differ = [](const std::string& field, std::size_t a, std::size_t b) {
    return "checkpoint model " + field + " " + std::to_string(a) +
           " does not match configured " + std::to_string(b);
  };
  if (got.d_emb != cfg.d_emb) throw ConfigError(differ("d_emb", got.d_emb, cfg.d_emb));
  if (got.d_h != cfg.d_h) throw ConfigError(differ("d_h", got.d_h, cfg.d_h));
  if (got.d_s != cfg.d_s) throw ConfigError(differ("d_s", got.d_s, cfg.d_s));
  if (got.K != cfg.K) throw ConfigError(differ("look-ahead", got.K, cfg.K));
  if (got.v_src != cfg.v_src) throw ConfigError(differ("v_src", got.v_src, cfg.v_src));
  if (got.v_tgt != cfg.v_tgt) throw ConfigError(differ("v_tgt", got.v_tgt, cfg.v_tgt));
}

}  // namespace kpgen
