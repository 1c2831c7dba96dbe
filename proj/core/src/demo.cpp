// SPDX-License-Identifier: Apache-2.0
#include "zst/demo.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "zst/error.hpp"
#include "zst/inference.hpp"

namespace zst {

namespace {

// symbol ranges of the base grammar
constexpr int kDet = 0, kDetN = 4;
constexpr int kAdj = 4, kAdjN = 8;
constexpr int kNoun = 12, kNounN = 12;
constexpr int kVerb = 24, kVerbN = 10;
constexpr int kAdv = 34, kAdvN = 6;
static_assert(kAdv + kAdvN == static_cast<int>(kToySymbols));

int pick(std::mt19937_64& rng, int first, int count) {
  return first + static_cast<int>(std::uniform_int_distribution<int>(0, count - 1)(rng));
}

bool coin(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

void noun_phrase(BaseSentence& s, std::mt19937_64& rng) {
  s.push_back(pick(rng, kDet, kDetN));
  if (coin(rng, 0.5)) s.push_back(pick(rng, kAdj, kAdjN));
  s.push_back(pick(rng, kNoun, kNounN));
}

}  // namespace

std::vector<BaseSentence> sample_base_sentences(std::size_t count, std::mt19937_64& rng) {
  std::set<BaseSentence> seen;
  std::vector<BaseSentence> out;
  out.reserve(count);
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > count * 1000 + 1000) throw ContractError("sample_base_sentences: cannot draw enough distinct sentences");
    BaseSentence s;
    noun_phrase(s, rng);
    s.push_back(pick(rng, kVerb, kVerbN));
    if (coin(rng, 0.6)) noun_phrase(s, rng);
    if (coin(rng, 0.3)) s.push_back(pick(rng, kAdv, kAdvN));
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

std::string toy_word(std::string_view lang, int symbol) {
  if (symbol < 0 || symbol >= static_cast<int>(kToySymbols)) throw ContractError("toy_word: symbol out of range");
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", symbol);
  return std::string(lang) + buf;
}

Tokens render(const BaseSentence& sentence, std::string_view lang) {
  Tokens out;
  out.reserve(sentence.size());
  for (int s : sentence) out.push_back(toy_word(lang, s));
  return out;
}

double routing_purity(std::span<const Tokens> outputs, std::string_view lang) {
  std::size_t total = 0, inside = 0;
  for (const auto& sentence : outputs) {
    for (const auto& t : sentence) {
      ++total;
      const bool form = t.size() == lang.size() + 2 && t.compare(0, lang.size(), lang) == 0 &&
                        std::isdigit(static_cast<unsigned char>(t[lang.size()])) &&
                        std::isdigit(static_cast<unsigned char>(t[lang.size() + 1]));
      if (form) ++inside;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(total);
}

std::vector<SentencePair> copy_corpus(std::size_t pairs, std::size_t word_count, std::size_t min_len,
                                      std::size_t max_len, std::uint64_t seed, const std::string& lang) {
  if (word_count == 0 || min_len == 0 || min_len > max_len) throw ContractError("copy_corpus: bad size parameters");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> length(min_len, max_len);
  std::uniform_int_distribution<std::size_t> word(0, word_count - 1);
  std::vector<SentencePair> out;
  out.reserve(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    Tokens t(length(rng));
    for (auto& w : t) w = "w" + std::to_string(word(rng));
    SentencePair p;
    p.source = t;
    p.source.insert(p.source.begin(), routing_token(lang));
    p.target = std::move(t);
    p.source_lang = lang;
    p.target_lang = lang;
    out.push_back(std::move(p));
  }
  return out;
}

EmbeddingTable aligned_toy_embeddings(std::span<const std::string> languages, std::size_t dim, std::uint64_t seed,
                                      double noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor base({kToySymbols, dim});
  for (double& v : base.data()) v = normal(rng);
  EmbeddingTable table;
  table.matrix = Tensor({kToySymbols * languages.size(), dim});
  std::size_t row = 0;
  for (const auto& lang : languages) {
    for (std::size_t s = 0; s < kToySymbols; ++s, ++row) {
      table.words.push_back(toy_word(lang, static_cast<int>(s)));
      auto out = table.matrix.row(row);
      for (std::size_t j = 0; j < dim; ++j) out[j] = base(s, j) + noise * normal(rng);
    }
  }
  return table;
}

TrainingConfig DemoOptions::default_config() {
  TrainingConfig c;
  c.embed_dim = 32;
  c.hidden = 64;
  c.layers = 1;
  c.epochs = 30;
  c.batch_size = 16;
  c.max_decode_len = 20;
  c.freeze_embeddings = true;
  return c;
}

bool DemoReport::passed() const { return purity >= 0.9 && zero_shot.score > baseline.score; }

std::string DemoReport::to_text() const {
  std::ostringstream os;
  char buf[96];
  auto line = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.6f\n", key, v);
    os << buf;
  };
  os << "vocab_size=" << vocab_size << '\n';
  os << "train_pairs=" << train_pairs << '\n';
  os << "test_pairs=" << test_pairs << '\n';
  os << "bleu_smoothing=" << to_string(zero_shot.smoothing) << '\n';
  line("bleu_seen_a_b", seen.score);
  line("bleu_zero_shot_a_c", zero_shot.score);
  line("bleu_shuffled_baseline", baseline.score);
  line("purity_a_c", purity);
  line("purity_switched_a_b", switched_purity);
  if (!loss_log.empty()) line("final_loss", loss_log.back().mean_loss);
  os << "passed=" << (passed() ? "true" : "false") << '\n';
  return os.str();
}

DemoReport run_zeroshot_demo(const DemoOptions& options, const TrainOptions& train_options) {
  const TrainingConfig& config = options.config;
  config.validate();
  if (options.train_pairs == 0 || options.test_pairs < 2) throw ConfigError("zeroshot-demo needs training pairs and at least 2 test pairs");

  std::mt19937_64 rng(config.seed);
  const auto base = sample_base_sentences(2 * options.train_pairs + options.test_pairs, rng);

  auto make_pairs = [&](std::size_t first, std::size_t count, const std::string& src, const std::string& tgt) {
    std::vector<SentencePair> out;
    for (std::size_t i = first; i < first + count; ++i) {
      SentencePair p;
      p.source = render(base[i], src);
      p.source.insert(p.source.begin(), routing_token(tgt));
      p.target = render(base[i], tgt);
      p.source_lang = src;
      p.target_lang = tgt;
      out.push_back(std::move(p));
    }
    return out;
  };
  std::vector<std::vector<SentencePair>> corpora;
  corpora.push_back(make_pairs(0, options.train_pairs, "a", "b"));
  corpora.push_back(make_pairs(options.train_pairs, options.train_pairs, "b", "c"));
  const std::size_t test_first = 2 * options.train_pairs;

  // the vocabulary needs <2c> and every C word, which the training pairs provide
  const Vocabulary vocab = build_vocab(corpora);

  Tensor initial;
  if (options.pretrained) {
    const std::vector<std::string> langs = {"a", "b", "c"};
    CompressOptions co;
    co.target_dim = config.embed_dim;
    const EmbeddingTable table =
        compress(aligned_toy_embeddings(langs, 2 * config.embed_dim, config.seed + 1, options.alignment_noise), co);
    initial = build_matrix(vocab, table, config.embed_dim, config.seed + 2);
  }
  TrainingState state = train(corpora, config, vocab, options.pretrained ? &initial : nullptr, train_options);

  DemoReport report;
  report.vocab_size = vocab.size();
  report.train_pairs = 2 * options.train_pairs;
  report.test_pairs = options.test_pairs;
  report.loss_log = state.loss_log;
  const BleuSmoothing smoothing = parse_smoothing(config.bleu_smoothing);

  std::vector<Tokens> seen_hyp, seen_ref, switched;
  for (std::size_t i = test_first; i < test_first + options.test_pairs; ++i) {
    const Tokens src = render(base[i], "a");
    report.sources.push_back(src);
    report.references.push_back(render(base[i], "c"));
    report.hypotheses.push_back(greedy_translate(src, "c", state.params, vocab, config.max_decode_len).tokens);
    seen_ref.push_back(render(base[i], "b"));
    seen_hyp.push_back(greedy_translate(src, "b", state.params, vocab, config.max_decode_len).tokens);
  }
  report.seen = bleu(seen_hyp, seen_ref, smoothing);
  report.zero_shot = bleu(report.hypotheses, report.references, smoothing);
  report.purity = routing_purity(report.hypotheses, "c");
  report.switched_purity = routing_purity(seen_hyp, "b");

  // baseline: same outputs paired with the wrong references (a derangement by rotation after a shuffle)
  std::vector<std::size_t> order(report.hypotheses.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x5bd1e995ULL);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  std::vector<Tokens> shuffled(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) shuffled[order[i]] = report.hypotheses[order[(i + 1) % order.size()]];
  report.baseline = bleu(shuffled, report.references, smoothing);
  return report;
}

}  // namespace zst
