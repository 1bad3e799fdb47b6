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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "kpgen/corpus.hpp"
#include "kpgen/error.hpp"
#include "kpgen/synth.hpp"

using namespace kpgen;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Vocabulary vocab_of(std::initializer_list<const char*> toks) {
  Vocabulary v;
  for (const char* t : toks) v.add(t);
  return v;
}

}  // namespace

TEST_CASE("tokenize lowercases, splits, and normalizes digits") {
  CHECK(tokenize("Semi-Automated Schema") ==
        std::vector<std::string>{"semi", "automated", "schema"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("top-200 beams") ==
        std::vector<std::string>{"top", "<digit>", "beams"});
  CHECK(tokenize("x2y") == std::vector<std::string>{"x", "<digit>", "y"});
  CHECK(tokenize("  a\t b\n") == std::vector<std::string>{"a", "b"});
  CHECK(tokenize("3.14, then 42!") ==
        std::vector<std::string>{"<digit>", "<digit>", "then", "<digit>"});
  // Literal placeholder survives, so normalized text re-tokenizes to itself.
  CHECK(tokenize("<digit> runs") ==
        std::vector<std::string>{"<digit>", "runs"});
  std::vector<std::string> once = tokenize("Top-200 BEAMS, 3 runs");
  CHECK(tokenize(detokenize(once)) == once);
}

TEST_CASE("vocabulary keeps most frequent tokens with lexicographic ties") {
  std::vector<std::vector<std::string>> docs = {{"a", "a", "b"}, {"a"}};
  Vocabulary v = build_vocab(docs, 7);
  CHECK(v.size() == 7);
  CHECK(v.token_to_id.at("a") == 5);
  CHECK(v.token_to_id.at("b") == 6);

  Vocabulary w = build_vocab(docs, 6);
  CHECK(w.size() == 6);
  CHECK(w.contains("a"));
  CHECK_FALSE(w.contains("b"));

  std::vector<std::vector<std::string>> tie = {{"b", "a"}, {"a", "b"}};
  Vocabulary u = build_vocab(tie, 6);
  CHECK(u.contains("a"));
  CHECK_FALSE(u.contains("b"));

  CHECK_THROWS_AS(build_vocab(docs, 5), ConfigError);

  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kUnk) == "<unk>");
  CHECK(v.token(Vocabulary::kBos) == "<bos>");
  CHECK(v.token(Vocabulary::kEos) == "<eos>");
  CHECK(v.token(Vocabulary::kSep) == "<sep>");
  CHECK(v.id_or_unk("zzz") == Vocabulary::kUnk);
}

TEST_CASE("linearize frames present then absent keyphrases") {
  Example ex;
  ex.title = {"schema", "matching"};
  ex.keyphrases = {{"ontology"}, {"schema", "matching"}};
  Vocabulary src = vocab_of({"schema", "matching"});
  Vocabulary tgt = vocab_of({"schema", "matching", "ontology"});
  LinearizedExample lin = linearize(ex, src, tgt);

  std::vector<int> want = {
      Vocabulary::kBos,           tgt.token_to_id.at("schema"),
      tgt.token_to_id.at("matching"), Vocabulary::kSep,
      tgt.token_to_id.at("ontology"), Vocabulary::kEos};
  CHECK(lin.target_ids == want);
  CHECK(lin.source_ids ==
        std::vector<int>{src.token_to_id.at("schema"),
                         src.token_to_id.at("matching")});
}

TEST_CASE("linearize orders present keyphrases by source position") {
  Example ex;
  ex.title = {"alpha", "beta", "gamma", "delta"};
  ex.keyphrases = {{"gamma", "delta"}, {"alpha"}, {"omega"}, {"sigma"}};
  Vocabulary src = vocab_of({"alpha", "beta", "gamma", "delta"});
  Vocabulary tgt =
      vocab_of({"alpha", "beta", "gamma", "delta", "omega", "sigma"});
  LinearizedExample lin = linearize(ex, src, tgt);
  auto kps = delinearize(lin.target_ids, tgt, lin.ext_tokens);
  REQUIRE(kps.size() == 4);
  CHECK(kps[0] == std::vector<std::string>{"alpha"});
  CHECK(kps[1] == std::vector<std::string>{"gamma", "delta"});
  // Absent keyphrases keep their given order.
  CHECK(kps[2] == std::vector<std::string>{"omega"});
  CHECK(kps[3] == std::vector<std::string>{"sigma"});
}

TEST_CASE("linearize shares extended ids across repeated source tokens") {
  Example ex;
  ex.title = {"a", "b", "a"};
  ex.keyphrases = {{"a"}};
  Vocabulary src = vocab_of({"a", "b"});
  Vocabulary tgt;  // neither a nor b generatable
  LinearizedExample lin = linearize(ex, src, tgt);
  REQUIRE(lin.copy_ids.size() == 3);
  CHECK(lin.copy_ids[0] == tgt.size());
  CHECK(lin.copy_ids[1] == tgt.size() + 1);
  CHECK(lin.copy_ids[2] == lin.copy_ids[0]);
  CHECK(lin.ext_tokens == std::vector<std::string>{"a", "b"});
  // Target keyphrase token a is copyable only: it takes its extended id.
  CHECK(lin.target_ids ==
        std::vector<int>{Vocabulary::kBos, tgt.size(), Vocabulary::kEos});
}

TEST_CASE("linearize copy map resolves back to source tokens") {
  Example ex;
  ex.title = {"sparse", "coding"};
  ex.abstract = {"with", "sparse", "dictionaries"};
  ex.keyphrases = {{"sparse", "coding"}};
  Vocabulary src = vocab_of({"sparse", "coding", "with"});
  Vocabulary tgt = vocab_of({"sparse", "coding"});
  LinearizedExample lin = linearize(ex, src, tgt);
  std::vector<std::string> source = {"sparse", "coding", "with", "sparse",
                                     "dictionaries"};
  for (std::size_t i = 0; i < source.size(); ++i) {
    int id = lin.copy_ids[i];
    CHECK(id < tgt.size() + static_cast<int>(lin.n_ext()));
    std::string back = id < tgt.size()
                           ? tgt.token(id)
                           : lin.ext_tokens[id - tgt.size()];
    CHECK(back == source[i]);
  }
  CHECK(lin.copy_ids[0] == lin.copy_ids[3]);
}

TEST_CASE("linearize rejects degenerate examples") {
  Vocabulary v;
  Example none;
  none.title = {"x"};
  CHECK_THROWS_AS(linearize(none, v, v), DataError);

  Example empty_kp;
  empty_kp.title = {"x"};
  empty_kp.keyphrases = {{}};
  CHECK_THROWS_AS(linearize(empty_kp, v, v), DataError);

  Example no_src;
  no_src.keyphrases = {{"x"}};
  CHECK_THROWS_AS(linearize(no_src, v, v), DataError);
}

TEST_CASE("linearize truncation can turn a keyphrase absent") {
  Example ex;
  ex.title = {"one", "two", "three", "four"};
  ex.keyphrases = {{"three", "four"}, {"one"}};
  Vocabulary src = vocab_of({"one", "two", "three", "four"});
  Vocabulary tgt = vocab_of({"one", "two", "three", "four"});
  LinearizedExample full = linearize(ex, src, tgt);
  auto kf = delinearize(full.target_ids, tgt, full.ext_tokens);
  CHECK(kf[0] == std::vector<std::string>{"one"});
  CHECK(kf[1] == std::vector<std::string>{"three", "four"});

  LinearizedExample cut = linearize(ex, src, tgt, 2);
  CHECK(cut.source_ids.size() == 2);
  auto kc = delinearize(cut.target_ids, tgt, cut.ext_tokens);
  // three four no longer occurs in the truncated source: it goes last.
  CHECK(kc[0] == std::vector<std::string>{"one"});
  CHECK(kc[1] == std::vector<std::string>{"three", "four"});
}

TEST_CASE("delinearize inverts linearize up to the declared reorder") {
  Example ex;
  ex.title = {"neural", "parsing", "with", "latent", "trees"};
  ex.abstract = {"we", "study", "neural", "parsing"};
  ex.keyphrases = {{"latent", "trees"}, {"neural", "parsing"}, {"graph"}};
  Vocabulary src = build_source_vocab({ex}, 50);
  Vocabulary tgt = build_target_vocab({ex}, 50);
  LinearizedExample lin = linearize(ex, src, tgt);
  auto kps = delinearize(lin.target_ids, tgt, lin.ext_tokens);
  std::multiset<std::string> got, want;
  for (const auto& kp : kps) got.insert(detokenize(kp));
  for (const auto& kp : ex.keyphrases) want.insert(detokenize(kp));
  CHECK(got == want);
  CHECK(kps[0] == std::vector<std::string>{"neural", "parsing"});
}

TEST_CASE("jsonl round trip reproduces examples exactly") {
  std::string dir = "corpus_io_tmp";
  std::filesystem::create_directories(dir);
  std::vector<Example> examples;
  Example a;
  a.title = tokenize("Top-200 Beam Search");
  a.abstract = tokenize("We try 42 settings.");
  a.keyphrases = {tokenize("beam search"), tokenize("top-200")};
  examples.push_back(a);
  Example b;
  b.title = {"short"};
  b.abstract = {};
  b.keyphrases = {{"short"}};
  examples.push_back(b);

  write_examples_jsonl(dir + "/t.jsonl", examples);
  std::vector<Example> back = read_examples_jsonl(dir + "/t.jsonl");
  REQUIRE(back.size() == examples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].title == examples[i].title);
    CHECK(back[i].abstract == examples[i].abstract);
    CHECK(back[i].keyphrases == examples[i].keyphrases);
  }
}

TEST_CASE("jsonl reader rejects malformed input") {
  std::string dir = "corpus_io_tmp";
  std::filesystem::create_directories(dir);
  auto write_raw = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir + "/" + name);
    out << text;
    return dir + "/" + name;
  };
  CHECK_THROWS_AS(read_examples_jsonl(dir + "/missing.jsonl"), DataError);
  CHECK_THROWS_AS(
      read_examples_jsonl(write_raw("bad.jsonl", "{not json\n")), DataError);
  CHECK_THROWS_AS(read_examples_jsonl(write_raw(
                      "nokeys.jsonl", R"({"title": "x", "abstract": "y"})"
                                      "\n")),
                  DataError);
  CHECK_THROWS_AS(
      read_examples_jsonl(write_raw(
          "emptykp.jsonl",
          R"({"title": "x", "abstract": "y", "keyphrases": ["--"]})"
          "\n")),
      DataError);
  CHECK_THROWS_AS(
      read_examples_jsonl(write_raw(
          "nonstring.jsonl",
          R"({"title": "x", "abstract": "y", "keyphrases": [3]})"
          "\n")),
      DataError);
}

TEST_CASE("synthetic corpus is byte-deterministic") {
  SynthConfig cfg;
  cfg.n_train = 30;
  cfg.n_valid = 5;
  cfg.n_test = 5;
  cfg.seed = 7;
  write_synth_corpus(cfg, "synth_tmp_a");
  write_synth_corpus(cfg, "synth_tmp_b");
  for (const char* name : {"train.jsonl", "valid.jsonl", "test.jsonl"}) {
    CHECK(slurp(std::string("synth_tmp_a/") + name) ==
          slurp(std::string("synth_tmp_b/") + name));
  }
  SynthConfig other = cfg;
  other.seed = 8;
  write_synth_corpus(other, "synth_tmp_c");
  CHECK(slurp("synth_tmp_a/train.jsonl") != slurp("synth_tmp_c/train.jsonl"));
}

TEST_CASE("synthetic corpus with absent probability zero is fully present") {
  SynthConfig cfg;
  cfg.absent_prob = 0.0;
  cfg.n_train = 40;
  cfg.n_valid = 1;
  cfg.n_test = 1;
  SynthSplits s = synth_corpus(cfg);
  for (const Example& ex : s.train) {
    std::vector<std::string> source = ex.title;
    source.insert(source.end(), ex.abstract.begin(), ex.abstract.end());
    for (const auto& kp : ex.keyphrases)
      CHECK(find_subsequence(source, kp) != std::string::npos);
  }
}

TEST_CASE("synthetic corpus statistics match the configured mean") {
  SynthConfig cfg;
  cfg.n_train = 200;
  cfg.n_valid = 1;
  cfg.n_test = 1;
  cfg.seed = 11;
  SynthSplits s = synth_corpus(cfg);
  REQUIRE(s.train.size() == 200);
  double total = 0;
  for (const Example& ex : s.train) {
    total += static_cast<double>(ex.keyphrases.size());
    // Gold keyphrases are distinct: ground-truth duplication is zero.
    std::set<std::string> uniq;
    for (const auto& kp : ex.keyphrases) uniq.insert(detokenize(kp));
    CHECK(uniq.size() == ex.keyphrases.size());
    // Absent synonyms never leak into the source.
    std::vector<std::string> source = ex.title;
    source.insert(source.end(), ex.abstract.begin(), ex.abstract.end());
    for (const auto& kp : ex.keyphrases) {
      bool all_tokens_in_source = true;
      for (const auto& tok : kp) {
        bool found = false;
        for (const auto& st : source)
          if (st == tok) {
            found = true;
            break;
          }
        if (!found) all_tokens_in_source = false;
      }
      bool contiguous = find_subsequence(source, kp) != std::string::npos;
      CHECK(contiguous == all_tokens_in_source);
    }
  }
  double mean = total / 200.0;
  CHECK(std::abs(mean - cfg.expected_mean_kps()) < 0.5);
}

TEST_CASE("synthetic corpus validates its configuration") {
  SynthConfig bad;
  bad.max_present = bad.phrases_per_topic + 1;
  CHECK_THROWS_AS(synth_corpus(bad), ConfigError);

  SynthConfig prob;
  prob.absent_prob = 1.5;
  CHECK_THROWS_AS(synth_corpus(prob), ConfigError);

  SynthConfig zero;
  zero.n_train = 0;
  CHECK_THROWS_AS(synth_corpus(zero), ConfigError);

  SynthConfig starve;
  starve.min_present = 1;
  starve.max_absent = 2;
  CHECK_THROWS_AS(synth_corpus(starve), ConfigError);

  SynthConfig huge;
  huge.topics = 100;
  huge.phrases_per_topic = 100;
  CHECK_THROWS_AS(synth_corpus(huge), ConfigError);
}
