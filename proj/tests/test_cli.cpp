// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "test_util.hpp"
#include "zst/corpus.hpp"
#include "zst/demo.hpp"

using zst::testing::TempDir;
using zst::testing::read_file;
using zst::testing::write_file;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "zst");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = zst::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string long_line(std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) s += (i ? " w" : "w") + std::to_string(i % 7);
  return s;
}

void write_corpus(const TempDir& dir) {
  write_file(dir / "es-pt.tsv", "o gato dorme\to gato dorme\n" + long_line(31) + "\tcurto\numa casa\tuma casa\n");
  write_file(dir / "pt-en.tsv", "o gato\tthe cat\na casa\tthe house\n");
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 1);
  CHECK(run({"no-such-command"}).code == 1);
  CHECK(run({"evaluate", "--hypotheses", "x"}).code == 1);
}

TEST_CASE("preprocess") {
  TempDir dir;
  write_corpus(dir);
  const auto out = dir / "prep";
  const auto r = run({"preprocess", "--corpus", "es-pt=" + (dir / "es-pt.tsv").string(), "--corpus",
                      "pt-en=" + (dir / "pt-en.tsv").string(), "--out-dir", out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string report = read_file(out / "preprocess_report.txt");
  CHECK(report.find("removed: 1\n") != std::string::npos);
  for (const char* f : {"train.pairs", "vocab.txt", "manifest.txt"}) CHECK(fs::exists(out / f));

  const auto pairs = zst::read_prepared_pairs(out / "train.pairs");
  CHECK(pairs.size() == 4);
  for (const auto& p : pairs) {
    CHECK(p.source.front() == zst::routing_token(p.target_lang));
    CHECK(p.source.size() <= 31);
  }
  const auto vocab = zst::Vocabulary::load(out / "vocab.txt");
  CHECK(vocab.languages() == std::vector<std::string>{"en", "es", "pt"});

  // identical inputs, identical artifacts
  const auto again = dir / "prep2";
  REQUIRE(run({"preprocess", "--corpus", "es-pt=" + (dir / "es-pt.tsv").string(), "--corpus",
               "pt-en=" + (dir / "pt-en.tsv").string(), "--out-dir", again.string()})
              .code == 0);
  for (const char* f : {"train.pairs", "vocab.txt"}) CHECK(read_file(out / f) == read_file(again / f));
  const std::string report2 = read_file(again / "preprocess_report.txt");
  CHECK(report2.substr(report2.find("max_sentence_len")) == report.substr(report.find("max_sentence_len")));
  CHECK(read_file(out / "manifest.txt").find("command=preprocess") != std::string::npos);
}

TEST_CASE("preprocess failures") {
  TempDir dir;
  write_file(dir / "empty.tsv", "");
  CHECK(run({"preprocess", "--corpus", "es-pt=" + (dir / "empty.tsv").string(), "--out-dir", (dir / "o").string()})
            .code == 2);
  CHECK(run({"preprocess", "--corpus", "es-pt=" + (dir / "absent.tsv").string(), "--out-dir", (dir / "o").string()})
            .code == 2);
  CHECK(run({"preprocess", "--corpus", "nonsense", "--out-dir", (dir / "o").string()}).code == 1);
}

TEST_CASE("train, translate and evaluate") {
  TempDir dir;
  write_corpus(dir);
  const auto prep = dir / "prep";
  REQUIRE(run({"preprocess", "--corpus", "es-pt=" + (dir / "es-pt.tsv").string(), "--corpus",
               "pt-en=" + (dir / "pt-en.tsv").string(), "--out-dir", prep.string()})
              .code == 0);
  const std::vector<std::string> small = {"--hidden", "6", "--embed-dim", "4", "--layers", "1", "--epochs", "2"};
  auto train_args = [&](const fs::path& out) {
    std::vector<std::string> a = {"train", "--data", (prep / "train.pairs").string(), "--vocab",
                                  (prep / "vocab.txt").string(), "--out-dir", out.string()};
    a.insert(a.end(), small.begin(), small.end());
    return a;
  };
  const auto r = run(train_args(dir / "run1"));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  REQUIRE(run(train_args(dir / "run2")).code == 0);
  CHECK(read_file(dir / "run1" / "model.ckpt") == read_file(dir / "run2" / "model.ckpt"));
  CHECK(fs::exists(dir / "run1" / "checkpoints" / "epoch-002.ckpt"));
  const std::string loss = read_file(dir / "run1" / "loss.csv");
  CHECK(loss.rfind("epoch,mean_loss\n", 0) == 0);
  CHECK(std::count(loss.begin(), loss.end(), '\n') == 3);

  auto bad = train_args(dir / "run3");
  bad.back() = "0";
  CHECK(run(bad).code == 1);

  write_file(dir / "in.txt", "o gato\numa casa dorme\n");
  const auto tr = run({"translate", "--checkpoint", (dir / "run1" / "model.ckpt").string(), "--vocab",
                       (prep / "vocab.txt").string(), "--input", (dir / "in.txt").string(), "--source-lang", "pt",
                       "--target-lang", "en", "--out-dir", (dir / "tr").string(), "--attention",
                       "--max-decode-len", "4"});
  REQUIRE_MESSAGE(tr.code == 0, tr.err);
  const std::string text = read_file(dir / "tr" / "translations.txt");
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(fs::exists(dir / "tr" / "manifest.txt"));
  CHECK(run({"translate", "--checkpoint", (dir / "run1" / "model.ckpt").string(), "--vocab",
             (prep / "vocab.txt").string(), "--input", (dir / "in.txt").string(), "--source-lang", "pt",
             "--target-lang", "fr", "--out-dir", (dir / "tr2").string()})
            .code == 1);
  write_file(dir / "junk.ckpt", "not a checkpoint");
  CHECK(run({"translate", "--checkpoint", (dir / "junk.ckpt").string(), "--vocab", (prep / "vocab.txt").string(),
             "--input", (dir / "in.txt").string(), "--source-lang", "pt", "--target-lang", "en", "--out-dir",
             (dir / "tr3").string()})
            .code == 2);

  write_file(dir / "hyp.txt", "the cat\nthe house\n");
  write_file(dir / "ref.txt", "the cat\nthe house\n");
  const auto ev = run({"evaluate", "--hypotheses", (dir / "hyp.txt").string(), "--references",
                       (dir / "ref.txt").string(), "--bleu-smoothing", "add-one-on-zero"});
  CHECK(ev.code == 0);
  CHECK(ev.out.find("bleu=1.000000") != std::string::npos);
  write_file(dir / "short.txt", "the cat\n");
  CHECK(run({"evaluate", "--hypotheses", (dir / "short.txt").string(), "--references", (dir / "ref.txt").string()})
            .code == 2);
}

TEST_CASE("compress-embeddings") {
  TempDir dir;
  std::string vec = "6 4\n";
  for (int i = 0; i < 6; ++i) {
    vec += "w" + std::to_string(i);
    for (int j = 0; j < 4; ++j) vec += " " + std::to_string((i * 7 + j * 3) % 5 - 2 + 0.1 * i * j);
    vec += "\n";
  }
  write_file(dir / "e.vec", vec);
  const auto r = run({"compress-embeddings", "--input", (dir / "e.vec").string(), "--out-dir", (dir / "c").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_file(dir / "c" / "embeddings.vec").rfind("6 2\n", 0) == 0);
  write_file(dir / "bad.vec", "2 3\na 1 2\n");
  CHECK(run({"compress-embeddings", "--input", (dir / "bad.vec").string(), "--out-dir", (dir / "d").string()}).code ==
        2);
}

TEST_CASE("manifest records the resolved configuration") {
  zst::cli::RunManifest m;
  m.command = "train";
  m.config.seed = 42;
  m.inputs.push_back({"data", "x.pairs"});
  const std::string text = m.to_text();
  CHECK(text.find("command=train\n") != std::string::npos);
  CHECK(text.find("seed=42\n") != std::string::npos);
  CHECK(text.find("config.learning-rate=0.001\n") != std::string::npos);
  CHECK(text.find("input.data=x.pairs\n") != std::string::npos);
}

TEST_CASE("demo report is reproducible") {
  zst::DemoOptions o;
  o.config.epochs = 2;
  o.config.hidden = 12;
  o.config.embed_dim = 8;
  o.train_pairs = 20;
  o.test_pairs = 6;
  const auto a = zst::run_zeroshot_demo(o);
  const auto b = zst::run_zeroshot_demo(o);
  CHECK(a.to_text() == b.to_text());
  CHECK(a.hypotheses == b.hypotheses);
  CHECK(a.train_pairs == 40);
  CHECK(a.references.size() == 6);
  for (const auto& s : a.sources)
    for (const auto& t : s) CHECK(t[0] == 'a');
}
