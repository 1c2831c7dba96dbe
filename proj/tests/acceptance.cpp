// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fails.
//   acceptance            all criteria
//   acceptance 2 7        selected criteria
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bleu_oracle.hpp"
#include "cli.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"
#include "zst/autodiff.hpp"
#include "zst/bleu.hpp"
#include "zst/corpus.hpp"
#include "zst/demo.hpp"
#include "zst/embeddings.hpp"
#include "zst/inference.hpp"
#include "zst/linalg.hpp"
#include "zst/training.hpp"

using namespace zst;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "zst");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = zst::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

// ---- criteria ----

Outcome gradient_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams p = testing::probe_model();
  const Batch b = testing::micro_batch();
  const auto report = testing::full_model_gradcheck(p, b, 1e-5);
  const auto names = std::as_const(p).named();
  double worst = 0.0;
  std::string worst_name;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (report.per_parameter[i] >= worst) {
      worst = report.per_parameter[i];
      worst_name = names[i].first;
    }
  }
  o.require(worst < 1e-4, "max relative error " + fmt("%.3g", worst) + " (" + worst_name + ") over " +
                              std::to_string(names.size()) + " parameter groups < 1e-4");
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, fmt("%.1f s < 60 s", secs));
  return o;
}

Outcome cosine_reproduction() {
  Outcome o;
  const std::vector<double> a = {1, 2, 0}, b = {1, 1, 2};
  const double s = cosine_similarity(a, b);
  o.require(s >= 0.5450 && s <= 0.5505, "cos(<1,2,0>,<1,1,2>) = " + fmt("%.6f", s) + " in [0.5450, 0.5505]");
  const double self = cosine_similarity(a, a);
  o.require(std::abs(self - 1.0) <= 1e-12, "cos(A,A) - 1 = " + fmt("%.1e", self - 1.0));
  return o;
}

Outcome loss_reproduction() {
  Outcome o;
  const std::size_t V = 20, T = 3;
  const std::vector<int> targets = {4, 0, 19};
  const std::vector<double> mask(T, 1.0);
  const double uniform = cross_entropy_loss(Tensor({T, V}, 0.37), targets, mask);
  o.require(std::abs(uniform - std::log(20.0)) <= 1e-9, "uniform loss - ln|V| = " + fmt("%.1e", uniform - std::log(20.0)));

  Tensor sharp({T, V}, -400.0);
  for (std::size_t w = 0; w < T; ++w) sharp(w, static_cast<std::size_t>(targets[w])) = 400.0;
  const double onehot = cross_entropy_loss(sharp, targets, mask);
  o.require(std::abs(onehot) <= 1e-9, "one-hot-correct loss = " + fmt("%.1e", onehot));

  // fused kernel, on and off the tape, against the explicit double sum
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng() % 10, cols = 2 + rng() % 40;
    Tensor logits({rows, cols});
    for (double& v : logits.data()) v = u(rng);
    std::vector<int> tg(rows);
    std::vector<double> mk(rows);
    for (std::size_t w = 0; w < rows; ++w) {
      tg[w] = static_cast<int>(rng() % cols);
      mk[w] = w == 0 || rng() % 3 != 0 ? 1.0 : 0.0;
    }
    double total = 0.0, count = 0.0;
    for (std::size_t w = 0; w < rows; ++w) {
      if (mk[w] == 0.0) continue;
      double mx = logits(w, 0), z = 0.0;
      for (std::size_t e = 0; e < cols; ++e) mx = std::max(mx, logits(w, e));
      for (std::size_t e = 0; e < cols; ++e) z += std::exp(logits(w, e) - mx);
      for (std::size_t e = 0; e < cols; ++e) {
        const double y = static_cast<int>(e) == tg[w] ? 1.0 : 0.0;
        total -= y * (logits(w, e) - mx - std::log(z));
      }
      count += 1.0;
    }
    const double direct = total / count;
    worst = std::max(worst, std::abs(cross_entropy_loss(logits, tg, mk) - direct));
    Tape tape(false);
    const double taped = softmax_cross_entropy(tape.constant(logits), tg, mk, count).value()[0];
    worst = std::max(worst, std::abs(taped - direct));
  }
  o.require(worst <= 1e-9, "fused vs double sum max |diff| = " + fmt("%.1e", worst) + " over 200 random inputs");
  return o;
}

Outcome compression() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  EmbeddingTable table;
  table.matrix = Tensor({5000, 300});
  for (double& v : table.matrix.data()) v = normal(rng);
  for (std::size_t i = 0; i < 5000; ++i) table.words.push_back("w" + std::to_string(i));
  const EmbeddingTable c = compress(table);
  const double secs = seconds_since(t0);
  o.require(c.dim() == 150, "300 -> " + std::to_string(c.dim()) + " dims");
  o.require(2 * c.stored_floats() == table.stored_floats(),
            std::to_string(table.stored_floats()) + " -> " + std::to_string(c.stored_floats()) + " floats");
  o.require(secs < 30.0, fmt("%.1f s at 5k words < 30 s", secs));

  // rank-k data: compressed cosines vs cosines in the sym_eig principal basis
  const std::size_t n = 200, d = 40, k = 6;
  Tensor coef({n, k}), basis({k, d});
  for (double& v : coef.data()) v = normal(rng);
  for (double& v : basis.data()) v = normal(rng);
  EmbeddingTable low;
  low.matrix = matmul(coef, basis);
  for (std::size_t i = 0; i < n; ++i) {
    low.words.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) low.matrix(i, j) += 0.5 * static_cast<double>(j);
  }
  const auto mean = column_mean(low.matrix);
  const auto eig = sym_eig(covariance(low.matrix, mean));
  Tensor centered = low.matrix;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centered(i, j) -= mean[j];
  const Tensor oracle = matmul(centered, eig.vectors);  // full-basis coordinates
  double worst = 0.0;
  for (std::size_t target : {k, k + 4}) {
    CompressOptions opt;
    opt.target_dim = target;
    opt.post_process = false;
    const auto out = compress(low, opt);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        worst = std::max(worst, std::abs(cosine_similarity(out.matrix.row(i), out.matrix.row(j)) -
                                         cosine_similarity(oracle.row(i), oracle.row(j))));
  }
  o.require(worst < 1e-6, "rank-6 pairwise cosine drift " + fmt("%.1e", worst) + " < 1e-6");
  return o;
}

Outcome memorization() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::vector<SentencePair>> corpora = {copy_corpus(200, 12, 2, 6, 1)};
  const Vocabulary vocab = build_vocab(corpora);
  TrainingConfig config;
  config.hidden = 64;
  config.epochs = 30;
  const TrainingState s = train(corpora, config, vocab);
  const double first = s.loss_log.front().mean_loss, last = s.loss_log.back().mean_loss;
  std::size_t exact = 0;
  for (const auto& p : corpora[0]) {
    const Tokens words(p.source.begin() + 1, p.source.end());
    if (greedy_translate(words, "x", s.params, vocab).tokens == p.target) ++exact;
  }
  const double secs = seconds_since(t0);
  o.require(last < 0.1, "final mean token loss " + fmt("%.4f", last) + " < 0.1");
  o.require(last < 0.1 * first, "first epoch " + fmt("%.4f", first) + ", ratio " + fmt("%.4f", last / first) + " < 0.1");
  o.require(exact >= 180, std::to_string(exact) + "/200 reproduced exactly (>= 90%)");
  o.require(secs < 600.0, fmt("%.1f s < 600 s", secs));
  return o;
}

Outcome zero_shot() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  testing::TempDir dir;
  const int code = run_cli({"zeroshot-demo", "--out-dir", dir.path().string()});
  const std::string report = testing::read_file(dir / "report.txt");
  auto value = [&](const std::string& key) {
    const auto at = report.find(key + "=");
    return at == std::string::npos ? std::nan("") : std::strtod(report.c_str() + at + key.size() + 1, nullptr);
  };
  const double purity = value("purity_a_c"), zs = value("bleu_zero_shot_a_c"), base = value("bleu_shuffled_baseline");
  const double switched = value("purity_switched_a_b"), seen = value("bleu_seen_a_b");
  const double secs = seconds_since(t0);
  o.require(code == 0, "zeroshot-demo exit " + std::to_string(code));
  o.require(purity >= 0.9, "A->C routing purity " + fmt("%.4f", purity) + " >= 0.9");
  o.require(zs > base, "A->C BLEU " + fmt("%.4f", zs) + " > shuffled baseline " + fmt("%.4f", base));
  o.require(switched >= 0.9, "routing token swapped to B: B purity " + fmt("%.4f", switched) + " >= 0.9");
  o.detail += "; seen A->B BLEU " + fmt("%.4f", seen);
  o.require(secs < 1200.0, fmt("%.1f s < 1200 s", secs));
  return o;
}

Outcome bleu_oracle() {
  Outcome o;
  std::mt19937_64 rng(100);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto [hyp, ref] = testing::random_corpus(rng, 1 + rng() % 20);
    bool same = true;
    for (auto mode : {BleuSmoothing::None, BleuSmoothing::AddOneOnZero}) {
      const auto fast = bleu(hyp, ref, mode);
      const auto slow = testing::naive_bleu(hyp, ref, mode);
      same = same && fast.matches == slow.matches && fast.totals == slow.totals && fast.score == slow.score;
    }
    agree += same ? 1 : 0;
  }
  o.require(agree == 100, std::to_string(agree) + "/100 random corpora equal brute force exactly");
  const std::vector<Tokens> id = {{"a", "b", "c", "d"}, {"e", "f", "g", "h", "i"}};
  const double identity = bleu(id, id).score;
  o.require(identity == 1.0, "identity corpus " + fmt("%.6f", identity));
  const std::vector<Tokens> h = {{"the", "cat", "on", "the", "mat"}};
  const std::vector<Tokens> r = {{"the", "cat", "sat", "on", "the", "mat"}};
  const double worked = bleu(h, r, BleuSmoothing::AddOneOnZero).score;
  o.require(std::abs(worked - 0.4376) <= 0.0005, "worked example " + fmt("%.6f", worked) + " vs 0.4376 +- 0.0005");
  return o;
}

Outcome determinism() {
  Outcome o;
  testing::TempDir dir;
  const std::vector<SentencePair> pairs = copy_corpus(60, 10, 2, 6, 3);
  write_prepared_pairs(dir / "train.pairs", pairs);
  const std::vector<std::vector<SentencePair>> corpora = {pairs};
  build_vocab(corpora).save(dir / "vocab.txt");
  auto train_into = [&](const std::string& name) {
    return run_cli({"train", "--data", (dir / "train.pairs").string(), "--vocab", (dir / "vocab.txt").string(),
                "--out-dir", (dir / name).string(), "--hidden", "16", "--embed-dim", "12", "--layers", "2",
                "--epochs", "3", "--seed", "11"});
  };
  const bool ran = train_into("a") == 0 && train_into("b") == 0;
  o.require(ran, "two train runs completed");
  if (!ran) return o;
  bool identical = true;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a" / "checkpoints")) {
    ++files;
    identical = identical && testing::read_file(e.path()) ==
                                 testing::read_file(dir / "b" / "checkpoints" / e.path().filename());
  }
  identical = identical && testing::read_file(dir / "a" / "model.ckpt") == testing::read_file(dir / "b" / "model.ckpt");
  o.require(identical && files == 3, std::to_string(files + 1) + " checkpoint files bit-identical across runs");

  const Vocabulary vocab = Vocabulary::load(dir / "vocab.txt");
  const TrainingState s = load_checkpoint(dir / "a" / "model.ckpt", &vocab);
  save_checkpoint(s, dir / "again.ckpt");
  const TrainingState back = load_checkpoint(dir / "again.ckpt", &vocab);
  const bool exact = back.params == s.params && back.optimizer.m == s.optimizer.m &&
                     back.optimizer.v == s.optimizer.v &&
                     testing::read_file(dir / "again.ckpt") == testing::read_file(dir / "a" / "model.ckpt");
  o.require(exact, "save/load round trip bit-exact");
  return o;
}

Outcome preprocessing() {
  Outcome o;
  testing::TempDir dir;
  std::string src31, src30;
  for (int i = 0; i < 31; ++i) src31 += (i ? " t" : "t") + std::to_string(i);
  for (int i = 0; i < 30; ++i) src30 += (i ? " u" : "u") + std::to_string(i);
  testing::write_file(dir / "c.tsv", "um dois\tone two\n" + src31 + "\tlong\n" + src30 + "\tborder\ntrês\tthree\n");
  const int code = run_cli({"preprocess", "--corpus", "pt-en=" + (dir / "c.tsv").string(), "--out-dir",
                        (dir / "out").string()});
  o.require(code == 0, "preprocess exit " + std::to_string(code));
  if (code != 0) return o;
  const auto pairs = read_prepared_pairs(dir / "out" / "train.pairs");
  bool long_gone = true, border_kept = false;
  for (const auto& p : pairs) {
    if (p.target == Tokens{"long"}) long_gone = false;
    if (p.target == Tokens{"border"}) border_kept = true;
  }
  o.require(pairs.size() == 3 && long_gone && border_kept,
            "4 pairs -> " + std::to_string(pairs.size()) + ", only the 31-token pair removed");
  const std::string report = testing::read_file(dir / "out" / "preprocess_report.txt");
  o.require(report.find("removed: 1\n") != std::string::npos, "report says removed: 1");

  const Vocabulary vocab = Vocabulary::load(dir / "out" / "vocab.txt");
  const Batch b = encode_batch(pairs, vocab);
  bool head = true;
  for (std::size_t r = 0; r < b.size; ++r) head = head && b.source_at(r, 0) == vocab.routing_id(pairs[r].target_lang);
  o.require(head, "routing token at position 0 of all " + std::to_string(b.size) + " encoded sources");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"cosine similarity", cosine_reproduction},
      {"cross-entropy loss", loss_reproduction},
      {"embedding compression", compression},
      {"memorization", memorization},
      {"zero-shot mechanism", zero_shot},
      {"BLEU oracle", bleu_oracle},
      {"determinism", determinism},
      {"preprocessing contract", preprocessing},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const long n = std::strtol(argv[i], nullptr, 10);
    if (n < 1 || n > static_cast<long>(criteria.size())) {
      std::fprintf(stderr, "usage: %s [criterion 1-%zu ...]\n", argv[0], criteria.size());
      return 2;
    }
    selected.insert(static_cast<std::size_t>(n));
  }
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
