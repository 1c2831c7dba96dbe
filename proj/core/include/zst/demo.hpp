// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "zst/bleu.hpp"
#include "zst/corpus.hpp"
#include "zst/embeddings.hpp"
#include "zst/training.hpp"

namespace zst {

// ---- synthetic data ----

/// A toy grammar over 40 base symbols: determiners, adjectives, nouns, verbs
/// and adverbs. Every language renders symbol k as "<lang><kk>", so
/// languages differ only in their word forms.
inline constexpr std::size_t kToySymbols = 40;

using BaseSentence = std::vector<int>;

/// Draws `count` distinct grammatical base sentences of 3 to 8 symbols.
std::vector<BaseSentence> sample_base_sentences(std::size_t count, std::mt19937_64& rng);
std::string toy_word(std::string_view lang, int symbol);
Tokens render(const BaseSentence& sentence, std::string_view lang);

/// Fraction of `outputs` tokens that are word forms of `lang`. An empty output set scores 0.
double routing_purity(std::span<const Tokens> outputs, std::string_view lang);

/// Copy task: source == target, tokens drawn from `word_count` words "w0".."w<n-1>",
/// lengths uniform in [min_len, max_len], routing token already prepended.
std::vector<SentencePair> copy_corpus(std::size_t pairs, std::size_t word_count, std::size_t min_len,
                                      std::size_t max_len, std::uint64_t seed, const std::string& lang = "x");

/// Cross-lingually aligned pseudo-pretrained vectors: every language's form of
/// a symbol shares one standard Gaussian vector, plus per-word Gaussian noise
/// of standard deviation `noise`.
EmbeddingTable aligned_toy_embeddings(std::span<const std::string> languages, std::size_t dim, std::uint64_t seed,
                                      double noise = 0.0);

// ---- demonstration ----

struct DemoOptions {
  TrainingConfig config = default_config();
  std::size_t train_pairs = 300;  // per seen direction
  std::size_t test_pairs = 100;
  bool pretrained = true;         // initialize from compressed aligned vectors
  double alignment_noise = 0.3;   // per-word deviation from the shared symbol vector

  static TrainingConfig default_config();
};

struct DemoReport {
  std::size_t vocab_size = 0;
  std::size_t train_pairs = 0;
  std::size_t test_pairs = 0;
  BleuReport seen;            // A->B on held-out sentences
  BleuReport zero_shot;       // A->C, never trained
  BleuReport baseline;        // A->C hypotheses shuffled across sentences
  double purity = 0.0;        // A->C outputs that are C words
  double switched_purity = 0.0;  // same sources routed to B, outputs that are B words
  std::vector<LossRecord> loss_log;
  std::vector<Tokens> sources, references, hypotheses;  // A->C test set

  bool passed() const;
  std::string to_text() const;
};

DemoReport run_zeroshot_demo(const DemoOptions& options, const TrainOptions& train_options = {});

}  // namespace zst
