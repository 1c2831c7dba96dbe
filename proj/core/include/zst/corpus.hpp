// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zst/text.hpp"

namespace zst {

struct SentencePair {
  Tokens source;
  Tokens target;
  std::string source_lang;
  std::string target_lang;
};

/// "<2xx>" for language code "xx".
std::string routing_token(std::string_view lang);
bool is_routing_token(std::string_view token);
/// Language codes are non-empty lowercase ASCII.
bool is_language_code(std::string_view lang);

/// [<2target>] ++ tokens. Throws ConfigError when `target_lang` is not in `languages`.
Tokens prepend_lang_token(const Tokens& tokens, std::string_view target_lang,
                          std::span<const std::string> languages);

/// Keeps pairs whose source and target both have at most `max_len` tokens,
/// not counting routing tokens.
std::vector<SentencePair> filter_by_length(std::span<const SentencePair> pairs, std::size_t max_len = 30);

/// Bijective token <-> id map. Ids 0..3 are <pad>, <s>, </s>, <unk>; one
/// routing token per language follows, sorted by language code.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary() = default;
  /// Validates the special-token prefix and uniqueness.
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return id_to_token_.size(); }
  /// Id of `token`, or <unk>.
  int id(std::string_view token) const;
  std::optional<int> find(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const noexcept { return id_to_token_; }

  std::vector<int> encode(const Tokens& tokens) const;
  Tokens decode(std::span<const int> ids) const;

  const std::vector<std::string>& languages() const noexcept { return languages_; }
  int routing_id(std::string_view lang) const;
  bool is_special(int id) const;

  /// FNV-1a over the newline-joined token list.
  std::uint64_t content_hash() const;

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> languages_;
};

/// Specials first, then tokens by descending count with lexicographic ties.
/// Tokens seen fewer than `min_count` times are dropped; `max_size` caps the
/// number of regular (non-special) tokens, 0 meaning no cap. Routing tokens
/// inside the pairs are not counted.
Vocabulary build_vocab(std::span<const std::vector<SentencePair>> corpora, std::size_t min_count = 1,
                       std::size_t max_size = 0);

/// Padded id matrices, row-major. `mask` is 1 on real target_out positions.
struct Batch {
  std::size_t size = 0;
  std::size_t source_len = 0;
  std::size_t target_len = 0;
  std::vector<int> source_ids;
  std::vector<std::size_t> source_lengths;
  std::vector<int> target_in;
  std::vector<int> target_out;
  std::vector<double> mask;

  int source_at(std::size_t row, std::size_t pos) const { return source_ids[row * source_len + pos]; }
  int target_in_at(std::size_t row, std::size_t pos) const { return target_in[row * target_len + pos]; }
  int target_out_at(std::size_t row, std::size_t pos) const { return target_out[row * target_len + pos]; }
  std::size_t token_count() const;
};

/// Sources must already carry their routing token.
Batch encode_batch(std::span<const SentencePair> pairs, const Vocabulary& vocab);

// ---- corpus files ----

/// Reads `<prefix>.<src>` + `<prefix>.<tgt>` aligned line files, or a
/// `source<TAB>target` file when `path` ends in `.tsv`. Lines are tokenized;
/// pairs with an empty side are dropped and counted in `dropped_empty`.
std::vector<SentencePair> read_parallel_corpus(const std::filesystem::path& path, const std::string& source_lang,
                                               const std::string& target_lang, std::size_t* dropped_empty = nullptr);

/// Preprocessed pair file: `src_lang<TAB>tgt_lang<TAB>source tokens<TAB>target tokens`.
void write_prepared_pairs(const std::filesystem::path& path, std::span<const SentencePair> pairs);
std::vector<SentencePair> read_prepared_pairs(const std::filesystem::path& path);

}  // namespace zst
