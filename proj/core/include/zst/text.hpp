// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace zst {

using Tokens = std::vector<std::string>;

/// Decodes UTF-8 into code points. Throws EncodingError with the byte offset
/// of the first malformed sequence.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);

/// Lowercases cased scripts (Latin, Greek, Cyrillic), splits on whitespace and
/// emits every punctuation mark, including the Devanagari danda, as its own token.
Tokens tokenize(std::string_view line, std::string_view lang);

std::string join(const Tokens& tokens, std::string_view sep = " ");
Tokens split_whitespace(std::string_view line);

/// Light Hindi stemmer: strips the longest matching suffix from a fixed table,
/// keeping at least two code points. Non-Devanagari tokens pass through.
Tokens stem_hindi(const Tokens& tokens);
std::string stem_hindi_word(const std::string& token);
/// The suffix table, longest first.
const std::vector<std::u32string>& hindi_suffixes();

}  // namespace zst
