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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kpgen/decode.hpp"
#include "kpgen/error.hpp"
#include "kpgen/metrics.hpp"
#include "kpgen/run_config.hpp"
#include "kpgen/synth.hpp"
#include "kpgen/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kpgen;

RunConfig read_config(const std::string& config_path, const std::vector<std::string>& sets) {
  if (config_path.empty()) return parse_run_config("{}", sets);
  return load_run_config(config_path, sets);
}

// Fills train/valid paths from a data directory laid out by synth-data
// (train.jsonl required, valid.jsonl optional).
void wire_data_dir(TrainConfig& cfg, const std::string& data_dir) {
  if (data_dir.empty()) return;
  cfg.train_path = data_dir + "/train.jsonl";
  const std::string valid = data_dir + "/valid.jsonl";
  cfg.valid_path = fs::exists(valid) ? valid : "";
}

// Keyphrase lists from a JSONL file: each line is an object whose
// "keyphrases" entry is an array of strings; other keys are ignored, so
// both prediction files and full example files read the same way.
std::vector<KeyphraseList> read_keyphrase_lists(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<KeyphraseList> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("keyphrases") || !j["keyphrases"].is_array()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected object with array keyphrases");
    }
    KeyphraseList kps;
    for (const auto& kp : j["keyphrases"]) {
      if (!kp.is_string()) {
        throw DataError(path + ":" + std::to_string(lineno) + ": keyphrases must be strings");
      }
      kps.push_back(tokenize(kp.get<std::string>()));
    }
    out.push_back(std::move(kps));
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const std::string& embedding_path) {
  if (embedding_path.empty()) return std::make_unique<HashBucketEmbedder>();
  return std::make_unique<FileEmbedder>(embedding_path);
}

KeyphraseList decode_example(Parameters<double>& params, const Checkpoint& ckpt,
                             const Example& ex) {
  const LinearizedExample lin =
      linearize_source(ex, ckpt.src_vocab, ckpt.tgt_vocab, ckpt.config.max_src_len);
  return greedy_decode(params, ckpt.config.model, lin, ckpt.tgt_vocab,
                       ckpt.config.decode_max_len)
      .keyphrases;
}

void write_predictions(const std::string& path, const std::vector<KeyphraseList>& preds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  for (const KeyphraseList& kps : preds) {
    json line = json::object();
    json arr = json::array();
    for (const auto& kp : kps) arr.push_back(detokenize(kp));
    line["keyphrases"] = arr;
    out << line.dump() << '\n';
  }
  if (!out) throw DataError("cannot write " + path);
}

int cmd_synth_data(const std::string& config_path, const std::vector<std::string>& sets,
                   const std::string& out_dir) {
  const RunConfig cfg = read_config(config_path, sets);
  write_synth_corpus(cfg.synth, out_dir);
  std::cout << "wrote " << out_dir << "/{train,valid,test}.jsonl (" << cfg.synth.n_train << "/"
            << cfg.synth.n_valid << "/" << cfg.synth.n_test << " examples)\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets,
              const std::string& data_dir, const std::string& out_dir,
              const std::string& resume_path) {
  RunConfig cfg = read_config(config_path, sets);
  wire_data_dir(cfg.train, data_dir);
  if (!out_dir.empty()) cfg.train.output_dir = out_dir;
  if (cfg.train.train_path.empty()) {
    throw ConfigError("train needs --data or a train_path in the config");
  }
  if (cfg.train.output_dir.empty()) {
    throw ConfigError("train needs --out or an output_dir in the config");
  }

  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) resume = load_checkpoint(resume_path);

  fs::create_directories(cfg.train.output_dir);
  const std::string log_path = cfg.train.output_dir + "/train_log.jsonl";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw DataError("cannot write " + log_path);

  const TrainResult result = train(cfg.train, &log, resume ? &*resume : nullptr);
  std::cout << "best_f1=" << result.best_f1 << " epochs=" << result.epochs_run
            << " steps=" << result.steps_run << " checkpoint=" << cfg.train.output_dir
            << "/best.ckpt\n";
  return 0;
}

int cmd_generate(const std::string& ckpt_path, const std::string& input_path,
                 const std::string& out_path) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  Parameters<double> params = checkpoint_parameters(ckpt);
  const std::vector<Example> examples = read_examples_jsonl(input_path);
  std::vector<KeyphraseList> preds;
  preds.reserve(examples.size());
  for (const Example& ex : examples) preds.push_back(decode_example(params, ckpt, ex));
  write_predictions(out_path, preds);
  std::cout << "wrote " << preds.size() << " predictions to " << out_path << "\n";
  return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path,
                 const std::string& report_path, const std::string& csv_path,
                 const std::string& embedding_path) {
  const std::vector<KeyphraseList> preds = read_keyphrase_lists(pred_path);
  const std::vector<KeyphraseList> golds = read_keyphrase_lists(gold_path);
  const std::unique_ptr<Embedder> embedder = make_embedder(embedding_path);
  const MetricsReport report = evaluate_records(preds, golds, *embedder);

  std::ofstream out(report_path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + report_path);
  out << report_to_json(report) << '\n';
  if (!out) throw DataError("cannot write " + report_path);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw DataError("cannot write " + csv_path);
    csv << report_to_csv(report);
  }
  std::cout << "records=" << report.records.size() << " f1=" << report.mean.f1
            << " dup_kp_pct=" << report.mean.dup_kp_pct << " self_bleu=" << report.mean.self_bleu
            << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& sets,
              const std::string& lambdas_arg, const std::string& data_dir,
              const std::string& out_dir) {
  const RunConfig base = read_config(config_path, sets);

  // Comma-separated non-negative weights; each token also names its run
  // directory, so the raw spelling is kept.
  std::vector<std::pair<std::string, double>> lambdas;
  std::string token;
  std::istringstream ls(lambdas_arg);
  while (std::getline(ls, token, ',')) {
    if (token.empty()) continue;
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError("bad lambda value: " + token);
    }
    if (value < 0.0) throw ConfigError("lambda must be non-negative: " + token);
    lambdas.emplace_back(token, value);
  }
  if (lambdas.empty()) throw ConfigError("sweep needs at least one lambda");

  const std::string eval_path = fs::exists(data_dir + "/test.jsonl")
                                    ? data_dir + "/test.jsonl"
                                    : data_dir + "/valid.jsonl";
  const std::vector<Example> eval_examples = read_examples_jsonl(eval_path);
  const std::unique_ptr<Embedder> embedder = make_embedder(base.metrics.embedding_path);

  struct Row {
    std::string lambda;
    double f1;
    double unique_kp_pct;
  };
  std::vector<Row> rows;
  for (const auto& [name, value] : lambdas) {
    try {
      RunConfig run = base;
      run.train.loss.lambda_target = value;
      run.train.loss.lambda_copy = value;
      wire_data_dir(run.train, data_dir);
      run.train.output_dir = out_dir + "/lambda_" + name;

      fs::create_directories(run.train.output_dir);
      std::ofstream log(run.train.output_dir + "/train_log.jsonl", std::ios::trunc);
      const TrainResult result = train(run.train, &log);

      Parameters<double> params = checkpoint_parameters(result.best);
      std::vector<KeyphraseList> preds, golds;
      for (const Example& ex : eval_examples) {
        preds.push_back(decode_example(params, result.best, ex));
        golds.push_back(ex.keyphrases);
      }
      const MetricsReport report = evaluate_records(preds, golds, *embedder);
      const Row row{name, report.mean.f1, 100.0 - report.mean.dup_kp_pct};
      rows.push_back(row);
      std::cout << "lambda=" << row.lambda << " f1=" << row.f1
                << " unique_kp_pct=" << row.unique_kp_pct << "\n";
    } catch (const std::exception& e) {
      std::cerr << "lambda " << name << " failed: " << e.what() << "\n";
    }
  }
  if (rows.empty()) throw DataError("sweep produced no rows");

  fs::create_directories(out_dir);
  const std::string csv_path = out_dir + "/sweep.csv";
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw DataError("cannot write " + csv_path);
  csv << "lambda,f1,unique_kp_pct\n";
  for (const Row& row : rows) {
    csv << row.lambda << "," << row.f1 << "," << row.unique_kp_pct << "\n";
  }
  std::cout << "wrote " << csv_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyphrase generation workbench: synthetic corpora, sequence-to-sequence "
               "training with unlikelihood objectives, greedy decoding, and metric reports"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, resume_path;
  std::string ckpt_path, input_path, out_path;
  std::string pred_path, gold_path, report_path, csv_path, embedding_path;
  std::string lambdas_arg;
  std::vector<std::string> sets;

  CLI::App* synth = app.add_subcommand("synth-data", "Write a seeded synthetic corpus");
  synth->add_option("--config", config_path, "Run config JSON file");
  synth->add_option("--set", sets, "Override a config field, key.path=value");
  synth->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* train = app.add_subcommand("train", "Train a model and keep the best checkpoint");
  train->add_option("--config", config_path, "Run config JSON file");
  train->add_option("--set", sets, "Override a config field, key.path=value");
  train->add_option("--data", data_dir, "Corpus directory (train.jsonl, optional valid.jsonl)");
  train->add_option("--out", out_dir, "Output directory for checkpoint and log");
  train->add_option("--resume", resume_path, "Checkpoint to continue from");

  CLI::App* generate = app.add_subcommand("generate", "Decode keyphrases for a JSONL input");
  generate->add_option("--ckpt", ckpt_path, "Trained checkpoint")->required();
  generate->add_option("--input", input_path, "Input JSONL (title, abstract)")->required();
  generate->add_option("--out", out_path, "Predictions JSONL")->required();

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate->add_option("--pred", pred_path, "Predictions JSONL")->required();
  evaluate->add_option("--gold", gold_path, "Gold JSONL")->required();
  evaluate->add_option("--report", report_path, "Report JSON output path")->required();
  evaluate->add_option("--csv", csv_path, "Optional CSV output path");
  evaluate->add_option("--embeddings", embedding_path,
                       "Word-vector text file (token v1 ... vd per line)");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Train and evaluate one model per lambda (lambda_target = lambda_copy)");
  sweep->add_option("--config", config_path, "Run config JSON file");
  sweep->add_option("--set", sets, "Override a config field, key.path=value");
  sweep->add_option("--lambdas", lambdas_arg, "Comma-separated weights, e.g. 0,5,15,50")
      ->required();
  sweep->add_option("--data", data_dir, "Corpus directory")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth_data(config_path, sets, out_dir);
    if (train->parsed()) return cmd_train(config_path, sets, data_dir, out_dir, resume_path);
    if (generate->parsed()) return cmd_generate(ckpt_path, input_path, out_path);
    if (evaluate->parsed()) {
      return cmd_evaluate(pred_path, gold_path, report_path, csv_path, embedding_path);
    }
    if (sweep->parsed()) return cmd_sweep(config_path, sets, lambdas_arg, data_dir, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const DimError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
