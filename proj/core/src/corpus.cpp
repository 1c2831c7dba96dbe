// SPDX-License-Identifier: Apache-2.0
#include "zst/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "zst/error.hpp"

namespace zst {

namespace fs = std::filesystem;

std::string routing_token(std::string_view lang) { return "<2" + std::string(lang) + ">"; }

bool is_language_code(std::string_view lang) {
  return !lang.empty() && std::all_of(lang.begin(), lang.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

bool is_routing_token(std::string_view token) {
  return token.size() > 3 && token.substr(0, 2) == "<2" && token.back() == '>' &&
         is_language_code(token.substr(2, token.size() - 3));
}

Tokens prepend_lang_token(const Tokens& tokens, std::string_view target_lang, std::span<const std::string> languages) {
  if (std::find(languages.begin(), languages.end(), target_lang) == languages.end()) {
    throw ConfigError("unknown target language '" + std::string(target_lang) + "'");
  }
  Tokens out;
  out.reserve(tokens.size() + 1);
  out.push_back(routing_token(target_lang));
  out.insert(out.end(), tokens.begin(), tokens.end());
  return out;
}

std::vector<SentencePair> filter_by_length(std::span<const SentencePair> pairs, std::size_t max_len) {
  if (max_len < 1) throw ContractError("filter_by_length: max_len must be at least 1");
  // routing tokens are not words of the sentence
  auto words = [](const Tokens& t) {
    return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [](const std::string& s) { return !is_routing_token(s); }));
  };
  std::vector<SentencePair> out;
  for (const auto& p : pairs) {
    if (words(p.source) <= max_len && words(p.target) <= max_len) out.push_back(p);
  }
  return out;
}

// ---- Vocabulary ----

namespace {
const char* const kSpecials[] = {"<pad>", "<s>", "</s>", "<unk>"};
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 4) throw FormatError("vocabulary has fewer than the 4 special tokens");
  for (int i = 0; i < 4; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != kSpecials[i]) {
      throw FormatError("vocabulary id " + std::to_string(i) + " must be " + kSpecials[i] + ", found '" +
                        tokens[static_cast<std::size_t>(i)] + "'");
    }
  }
  Vocabulary v;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty()) throw FormatError("empty token at vocabulary id " + std::to_string(i));
    auto [it, inserted] = v.token_to_id_.emplace(tokens[i], static_cast<int>(i));
    if (!inserted) throw FormatError("duplicate vocabulary token '" + tokens[i] + "'");
    if (i >= 4 && is_routing_token(tokens[i])) v.languages_.push_back(tokens[i].substr(2, tokens[i].size() - 3));
  }
  v.id_to_token_ = std::move(tokens);
  return v;
}

Vocabulary Vocabulary::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  for (const auto& t : id_to_token_) out << t << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

int Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw ContractError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocabulary::decode(std::span<const int> ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

int Vocabulary::routing_id(std::string_view lang) const {
  auto found = find(routing_token(lang));
  if (!found) throw ConfigError("language '" + std::string(lang) + "' has no routing token in this vocabulary");
  return *found;
}

bool Vocabulary::is_special(int id) const {
  return id >= 0 && static_cast<std::size_t>(id) < 4 + languages_.size();
}

std::uint64_t Vocabulary::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : id_to_token_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vocabulary build_vocab(std::span<const std::vector<SentencePair>> corpora, std::size_t min_count, std::size_t max_size) {
  std::set<std::string> languages;
  std::map<std::string, std::size_t> counts;
  std::size_t pairs = 0;
  for (const auto& corpus : corpora) {
    for (const auto& p : corpus) {
      ++pairs;
      for (const auto* lang : {&p.source_lang, &p.target_lang}) {
        if (!is_language_code(*lang)) throw ConfigError("invalid language code '" + *lang + "'");
        languages.insert(*lang);
      }
      for (const auto* side : {&p.source, &p.target})
        for (const auto& t : *side)
          if (!is_routing_token(t)) ++counts[t];
    }
  }
  if (pairs == 0) throw ContractError("build_vocab: no sentence pairs");

  std::vector<std::string> tokens(std::begin(kSpecials), std::end(kSpecials));
  for (const auto& lang : languages) tokens.push_back(routing_token(lang));
  for (const auto& t : tokens) counts.erase(t);

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // map iteration is already lexicographic; stable sort keeps that for ties
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::size_t kept = 0;
  for (const auto& [tok, n] : ranked) {
    if (n < min_count) break;
    if (max_size != 0 && kept >= max_size) break;
    tokens.push_back(tok);
    ++kept;
  }
  return Vocabulary::from_tokens(std::move(tokens));
}

// ---- batching ----

std::size_t Batch::token_count() const {
  std::size_t n = 0;
  for (double m : mask) n += m != 0.0 ? 1 : 0;
  return n;
}

Batch encode_batch(std::span<const SentencePair> pairs, const Vocabulary& vocab) {
  if (pairs.empty()) throw ContractError("encode_batch: no pairs");
  Batch b;
  b.size = pairs.size();
  for (const auto& p : pairs) {
    if (p.source.empty()) throw ContractError("encode_batch: empty source sentence");
    b.source_len = std::max(b.source_len, p.source.size());
    b.target_len = std::max(b.target_len, p.target.size() + 1);
  }
  b.source_ids.assign(b.size * b.source_len, Vocabulary::kPad);
  b.target_in.assign(b.size * b.target_len, Vocabulary::kPad);
  b.target_out.assign(b.size * b.target_len, Vocabulary::kPad);
  b.mask.assign(b.size * b.target_len, 0.0);
  for (std::size_t r = 0; r < b.size; ++r) {
    const auto& p = pairs[r];
    b.source_lengths.push_back(p.source.size());
    for (std::size_t i = 0; i < p.source.size(); ++i) b.source_ids[r * b.source_len + i] = vocab.id(p.source[i]);
    b.target_in[r * b.target_len] = Vocabulary::kBos;
    for (std::size_t i = 0; i < p.target.size(); ++i) {
      const int id = vocab.id(p.target[i]);
      b.target_in[r * b.target_len + i + 1] = id;
      b.target_out[r * b.target_len + i] = id;
    }
    b.target_out[r * b.target_len + p.target.size()] = Vocabulary::kEos;
    for (std::size_t i = 0; i <= p.target.size(); ++i) b.mask[r * b.target_len + i] = 1.0;
  }
  return b;
}

// ---- files ----

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

Tokens tokenize_at(const std::string& line, const std::string& lang, const fs::path& path, std::size_t lineno) {
  try {
    return tokenize(line, lang);
  } catch (const EncodingError& e) {
    throw EncodingError(path.string() + ":" + std::to_string(lineno) + ": " + e.what(), e.byte_offset());
  }
}

}  // namespace

std::vector<SentencePair> read_parallel_corpus(const fs::path& path, const std::string& source_lang,
                                               const std::string& target_lang, std::size_t* dropped_empty) {
  if (!is_language_code(source_lang) || !is_language_code(target_lang)) {
    throw ConfigError("invalid language pair '" + source_lang + "-" + target_lang + "'");
  }
  std::vector<std::pair<std::string, std::string>> raw;
  fs::path origin = path;
  if (path.extension() == ".tsv") {
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto tab = lines[i].find('\t');
      if (tab == std::string::npos || lines[i].find('\t', tab + 1) != std::string::npos) {
        throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": expected exactly one TAB");
      }
      raw.emplace_back(lines[i].substr(0, tab), lines[i].substr(tab + 1));
    }
  } else {
    const fs::path src = path.string() + "." + source_lang;
    const fs::path tgt = path.string() + "." + target_lang;
    const auto a = read_lines(src);
    const auto b = read_lines(tgt);
    if (a.size() != b.size()) {
      throw FormatError(src.string() + " has " + std::to_string(a.size()) + " lines but " + tgt.string() + " has " +
                        std::to_string(b.size()));
    }
    for (std::size_t i = 0; i < a.size(); ++i) raw.emplace_back(a[i], b[i]);
    origin = src;
  }
  if (raw.empty()) throw FormatError("corpus " + path.string() + " is empty");

  std::vector<SentencePair> pairs;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    SentencePair p;
    p.source = tokenize_at(raw[i].first, source_lang, origin, i + 1);
    p.target = tokenize_at(raw[i].second, target_lang, origin, i + 1);
    p.source_lang = source_lang;
    p.target_lang = target_lang;
    if (p.source.empty() || p.target.empty()) {
      ++dropped;
      continue;
    }
    pairs.push_back(std::move(p));
  }
  if (dropped_empty) *dropped_empty = dropped;
  return pairs;
}

void write_prepared_pairs(const fs::path& path, std::span<const SentencePair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : pairs) {
    out << p.source_lang << '\t' << p.target_lang << '\t' << join(p.source) << '\t' << join(p.target) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<SentencePair> read_prepared_pairs(const fs::path& path) {
  const auto lines = read_lines(path);
  std::vector<SentencePair> pairs;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = lines[i].find('\t', start);
      fields.push_back(lines[i].substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": expected 4 TAB-separated fields");
    }
    SentencePair p{split_whitespace(fields[2]), split_whitespace(fields[3]), fields[0], fields[1]};
    if (p.source.empty() || p.target.empty() || !is_language_code(p.source_lang) || !is_language_code(p.target_lang)) {
      throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": malformed prepared pair");
    }
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw FormatError("prepared corpus " + path.string() + " is empty");
  return pairs;
}

}  // namespace zst
