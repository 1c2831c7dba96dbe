// SPDX-License-Identifier: Apache-2.0
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "zst/corpus.hpp"
#include "zst/error.hpp"
#include "zst/text.hpp"

using namespace zst;
using zst::testing::TempDir;
using zst::testing::read_file;
using zst::testing::write_file;

namespace {

SentencePair pair_of(std::size_t src_len, std::size_t tgt_len, const std::string& tgt_lang = "pt") {
  SentencePair p;
  for (std::size_t i = 0; i < src_len; ++i) p.source.push_back("s" + std::to_string(i));
  for (std::size_t i = 0; i < tgt_len; ++i) p.target.push_back("t" + std::to_string(i));
  p.source_lang = "es";
  p.target_lang = tgt_lang;
  return p;
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Hello, world.", "en") == Tokens{"hello", ",", "world", "."});
  CHECK(tokenize("", "en").empty());
  CHECK(tokenize("   \t ", "en").empty());
  CHECK(tokenize("राम गच्छति।", "sa") == Tokens{"राम", "गच्छति", "।"});
  CHECK(tokenize("ΑΘΗΝΑ Москва", "xx") == Tokens{"αθηνα", "москва"});
  CHECK(tokenize("¿Qué?", "es") == Tokens{"¿", "qué", "?"});
}

TEST_CASE("tokenize rejects malformed UTF-8 with the byte offset") {
  const std::string bad = std::string("ab") + static_cast<char>(0xC3);
  try {
    (void)tokenize(bad, "en");
    FAIL("expected EncodingError");
  } catch (const EncodingError& e) {
    CHECK(e.byte_offset() == 2);
  }
  CHECK_THROWS_AS(tokenize(std::string("\xC0\x80"), "en"), EncodingError);
}

TEST_CASE("utf8 round trip") {
  const std::string s = "नमस्ते olá ünï";
  CHECK(utf8_encode(utf8_decode(s)) == s);
}

TEST_CASE("prepend_lang_token") {
  const std::vector<std::string> langs = {"hi", "pt", "sa"};
  CHECK(prepend_lang_token({"namaste"}, "hi", langs) == Tokens{"<2hi>", "namaste"});
  CHECK(prepend_lang_token({}, "pt", langs) == Tokens{"<2pt>"});
  CHECK(prepend_lang_token({"<2hi>", "x"}, "hi", langs) == Tokens{"<2hi>", "<2hi>", "x"});
  CHECK_THROWS_AS(prepend_lang_token({"x"}, "fr", langs), ConfigError);
}

TEST_CASE("prepend_lang_token adds exactly one well-formed head token") {
  const std::vector<std::string> langs = {"a", "bb", "ccc"};
  const std::regex head("^<2[a-z]+>$");
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    Tokens t(rng() % 6, "w");
    const auto& lang = langs[rng() % langs.size()];
    const Tokens out = prepend_lang_token(t, lang, langs);
    CHECK(out.size() == t.size() + 1);
    CHECK(std::regex_match(out.front(), head));
  }
}

TEST_CASE("filter_by_length") {
  std::vector<SentencePair> pairs = {pair_of(31, 5), pair_of(30, 30), pair_of(5, 31), pair_of(1, 1)};
  const auto kept = filter_by_length(pairs, 30);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].source.size() == 30);
  CHECK(kept[1].source.size() == 1);
  CHECK(filter_by_length(std::vector<SentencePair>{}, 30).empty());
}

TEST_CASE("filter_by_length does not count the routing token") {
  SentencePair p = pair_of(30, 30);
  p.source.insert(p.source.begin(), "<2pt>");
  const std::vector<SentencePair> pairs = {p};
  CHECK(filter_by_length(pairs, 30).size() == 1);
}

TEST_CASE("filter_by_length output is a subset satisfying the bound") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> len(1, 40);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SentencePair> pairs;
    for (int i = 0; i < 30; ++i) pairs.push_back(pair_of(len(rng), len(rng)));
    const std::size_t limit = 1 + rng() % 35;
    const auto kept = filter_by_length(pairs, limit);
    std::size_t expected = 0;
    for (const auto& p : pairs) expected += (p.source.size() <= limit && p.target.size() <= limit) ? 1 : 0;
    CHECK(kept.size() == expected);
    std::size_t cursor = 0;
    for (const auto& k : kept) {
      CHECK(k.source.size() <= limit);
      CHECK(k.target.size() <= limit);
      while (cursor < pairs.size() && pairs[cursor].source != k.source) ++cursor;
      CHECK(cursor < pairs.size());
    }
  }
}

TEST_CASE("build_vocab") {
  SentencePair p;
  p.source = {"<2sa>", "a", "a", "b"};
  p.target = {"a"};
  p.source_lang = "hi";
  p.target_lang = "sa";
  const std::vector<std::vector<SentencePair>> corpora = {{p}};

  const Vocabulary v = build_vocab(corpora);
  CHECK(v.tokens() == std::vector<std::string>{"<pad>", "<s>", "</s>", "<unk>", "<2hi>", "<2sa>", "a", "b"});
  CHECK(v.id("a") == 6);
  CHECK(v.id("b") == 7);
  CHECK(v.routing_id("hi") == 4);
  CHECK(v.languages() == std::vector<std::string>{"hi", "sa"});

  SentencePair q = p;
  q.target = {};
  const std::vector<std::vector<SentencePair>> single = {{q}};
  const Vocabulary m = build_vocab(single, 2);
  CHECK(!m.find("b").has_value());
  CHECK(m.id("b") == Vocabulary::kUnk);
  CHECK(m.id("a") == 6);

  CHECK(build_vocab(corpora).tokens() == v.tokens());
  CHECK(build_vocab(corpora, 1, 1).size() == 7);
  CHECK_THROWS_AS(build_vocab(std::vector<std::vector<SentencePair>>{}), ContractError);
}

TEST_CASE("vocabulary is a bijection and survives a file round trip") {
  std::vector<SentencePair> pairs;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 40; ++i) {
    SentencePair p = pair_of(1 + rng() % 8, 1 + rng() % 8, i % 2 ? "pt" : "hi");
    for (auto& t : p.source) t += std::to_string(rng() % 5);
    pairs.push_back(p);
  }
  const std::vector<std::vector<SentencePair>> corpora = {pairs};
  const Vocabulary v = build_vocab(corpora);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.id(v.token(static_cast<int>(i))) == static_cast<int>(i));

  TempDir dir;
  v.save(dir / "vocab.txt");
  const Vocabulary back = Vocabulary::load(dir / "vocab.txt");
  CHECK(back.tokens() == v.tokens());
  CHECK(back.content_hash() == v.content_hash());
  CHECK(back.languages() == v.languages());

  write_file(dir / "bad.txt", "<s>\n<pad>\n</s>\n<unk>\nx\n");
  CHECK_THROWS_AS(Vocabulary::load(dir / "bad.txt"), FormatError);
  write_file(dir / "dup.txt", "<pad>\n<s>\n</s>\n<unk>\nx\nx\n");
  CHECK_THROWS_AS(Vocabulary::load(dir / "dup.txt"), FormatError);
}

TEST_CASE("encode_batch") {
  SentencePair a;
  a.source = {"<2pt>", "x", "y"};
  a.target = {"y"};
  a.source_lang = "es";
  a.target_lang = "pt";
  SentencePair b = a;
  b.source = {"<2pt>", "x", "y", "x", "y"};
  b.target = {"x", "y", "x"};
  const std::vector<std::vector<SentencePair>> corpora = {{a, b}};
  const Vocabulary v = build_vocab(corpora);

  const std::vector<SentencePair> one = {a};
  const Batch single = encode_batch(one, v);
  CHECK(single.size == 1);
  CHECK(single.source_len == 3);
  CHECK(single.source_ids.size() == 3);

  SentencePair shorter = a;
  shorter.source = {"<2pt>", "x"};
  SentencePair longer = a;
  longer.source = {"<2pt>", "x", "y", "x"};
  const std::vector<SentencePair> two = {shorter, longer};
  const Batch batch = encode_batch(two, v);
  CHECK(batch.source_len == 4);
  CHECK(batch.source_at(0, 2) == Vocabulary::kPad);
  CHECK(batch.source_at(0, 3) == Vocabulary::kPad);
  CHECK(batch.source_at(1, 3) != Vocabulary::kPad);
  for (std::size_t r = 0; r < batch.size; ++r) CHECK(batch.source_at(r, 0) == v.routing_id("pt"));

  const std::vector<SentencePair> ab = {a, b};
  const Batch t = encode_batch(ab, v);
  for (std::size_t r = 0; r < t.size; ++r) {
    double row = 0.0;
    for (std::size_t i = 0; i < t.target_len; ++i) row += t.mask[r * t.target_len + i];
    CHECK(row == static_cast<double>(ab[r].target.size() + 1));
    CHECK(t.target_in_at(r, 0) == Vocabulary::kBos);
    for (std::size_t i = 0; i < ab[r].target.size(); ++i) CHECK(t.target_in_at(r, i + 1) == t.target_out_at(r, i));
    CHECK(t.target_out_at(r, ab[r].target.size()) == Vocabulary::kEos);
    for (std::size_t i = ab[r].target.size() + 1; i < t.target_len; ++i) {
      CHECK(t.mask[r * t.target_len + i] == 0.0);
      CHECK(t.target_out_at(r, i) == Vocabulary::kPad);
    }
  }
  CHECK(t.token_count() == 2 + 4);
  CHECK(v.decode(v.encode(b.source)) == b.source);
}

TEST_CASE("stem_hindi") {
  CHECK(stem_hindi_word("लड़कों") == "लड़क");
  CHECK(stem_hindi_word("राम") == "राम");
  CHECK(stem_hindi_word("hello") == "hello");
  CHECK(stem_hindi(Tokens{}).empty());
  CHECK(stem_hindi(Tokens{"लड़कों", "x"}) == Tokens{"लड़क", "x"});
  // never strips below two code points
  CHECK(utf8_decode(stem_hindi_word("की")).size() >= 1);
  for (const auto& w : {"कों", "लाएंगी", "घरों"}) CHECK(utf8_decode(stem_hindi_word(w)).size() >= 2);
  const auto& table = hindi_suffixes();
  for (std::size_t i = 1; i < table.size(); ++i) CHECK(table[i - 1].size() >= table[i].size());
}

TEST_CASE("read_parallel_corpus") {
  TempDir dir;
  write_file(dir / "c.es", "Hola mundo.\n\nadiós\n");
  write_file(dir / "c.pt", "Olá mundo.\nvazio\ntchau\n");
  std::size_t dropped = 0;
  const auto pairs = read_parallel_corpus(dir / "c", "es", "pt", &dropped);
  CHECK(pairs.size() == 2);
  CHECK(dropped == 1);
  CHECK(pairs[0].source == Tokens{"hola", "mundo", "."});
  CHECK(pairs[0].target_lang == "pt");

  write_file(dir / "t.tsv", "a b\tc d\ne\tf\n");
  CHECK(read_parallel_corpus(dir / "t.tsv", "es", "pt").size() == 2);
  write_file(dir / "bad.tsv", "a b c d\n");
  CHECK_THROWS_AS(read_parallel_corpus(dir / "bad.tsv", "es", "pt"), FormatError);
  write_file(dir / "empty.tsv", "");
  CHECK_THROWS_AS(read_parallel_corpus(dir / "empty.tsv", "es", "pt"), FormatError);
  write_file(dir / "m.es", "a\nb\n");
  write_file(dir / "m.pt", "a\n");
  CHECK_THROWS_AS(read_parallel_corpus(dir / "m", "es", "pt"), FormatError);
  CHECK_THROWS_AS(read_parallel_corpus(dir / "missing", "es", "pt"), IoError);
}

TEST_CASE("prepared pairs round trip") {
  TempDir dir;
  std::vector<SentencePair> pairs = {pair_of(3, 2), pair_of(1, 4, "hi")};
  pairs[0].source.insert(pairs[0].source.begin(), "<2pt>");
  write_prepared_pairs(dir / "p.pairs", pairs);
  const auto back = read_prepared_pairs(dir / "p.pairs");
  REQUIRE(back.size() == 2);
  CHECK(back[0].source == pairs[0].source);
  CHECK(back[1].target == pairs[1].target);
  CHECK(back[1].target_lang == "hi");
  const std::string first = read_file(dir / "p.pairs");
  write_prepared_pairs(dir / "q.pairs", back);
  CHECK(read_file(dir / "q.pairs") == first);
}
