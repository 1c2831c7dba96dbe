// SPDX-License-Identifier: Apache-2.0
#include "zst/text.hpp"

#include <algorithm>

#include "zst/error.hpp"

namespace zst {

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
      min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
      min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
      min = 0x10000;
    } else {
      throw EncodingError("invalid UTF-8 lead byte", i);
    }
    if (i + len > text.size()) throw EncodingError("truncated UTF-8 sequence", i);
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) throw EncodingError("invalid UTF-8 continuation byte", i + k);
      cp = (cp << 6) | (b & 0x3F);
    }
    if (len > 1 && cp < min) throw EncodingError("overlong UTF-8 sequence", i);
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) throw EncodingError("invalid code point", i);
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

namespace {

bool is_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0x00A1: case 0x00A7: case 0x00AB: case 0x00B6: case 0x00B7: case 0x00BB: case 0x00BF:
    case 0x0964: case 0x0965:  // danda, double danda
    case 0x0970:
      return true;
    default:
      break;
  }
  return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x3003) ||
         (c >= 0x3008 && c <= 0x3011) || (c >= 0xFF01 && c <= 0xFF0F);
}

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c < 0xC0) return c;
  if (c <= 0xDE) return c == 0xD7 ? c : c + 0x20;
  if (c >= 0x100 && c <= 0x17F) {
    if ((c <= 0x137 || (c >= 0x14A && c <= 0x177)) && c % 2 == 0) return c + 1;
    if (((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) && c % 2 == 1) return c + 1;
    if (c == 0x178) return 0xFF;
    return c;
  }
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

bool is_devanagari(char32_t c) { return c >= 0x0900 && c <= 0x097F; }

}  // namespace

Tokens tokenize(std::string_view line, std::string_view /*lang*/) {
  const std::u32string cps = utf8_decode(line);
  Tokens out;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(utf8_encode(current));
      current.clear();
    }
  };
  for (char32_t c : cps) {
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.push_back(utf8_encode(std::u32string(1, c)));
    } else {
      current.push_back(to_lower(c));
    }
  }
  flush();
  return out;
}

std::string join(const Tokens& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

Tokens split_whitespace(std::string_view line) {
  Tokens out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' || line[i] == '\n')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != '\n') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

const std::vector<std::u32string>& hindi_suffixes() {
  // Light-stemmer inflection table for Hindi (nominal, adjectival and verbal
  // endings), grouped by length.
  static const std::vector<std::u32string> table = [] {
    std::vector<std::u32string> s = {
        U"ाएंगी", U"ाएंगे", U"ाऊंगी", U"ाऊंगा", U"ाइयाँ", U"ाइयों", U"ाइयां",
        U"ाएगी", U"ाएगा", U"ाओगी", U"ाओगे", U"एंगी", U"ेंगी", U"एंगे", U"ेंगे", U"ूंगी", U"ूंगा", U"ातीं",
        U"नाओं", U"नाएं", U"ताओं", U"ताएं", U"ियाँ", U"ियों", U"ियां",
        U"ाकर", U"ाइए", U"ाईं", U"ाया", U"ेगी", U"ेगा", U"ोगी", U"ोगे", U"ाने", U"ाना", U"ाते", U"ाती",
        U"ाता", U"तीं", U"ाओं", U"ाएं", U"ुओं", U"ुएं", U"ुआं",
        U"कर", U"ाओ", U"िए", U"ाई", U"ाए", U"ने", U"नी", U"ना", U"ते", U"ीं", U"ती", U"ता", U"ाँ", U"ां",
        U"ों", U"ें",
        U"ो", U"े", U"ू", U"ु", U"ी", U"ि", U"ा",
    };
    std::stable_sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    return s;
  }();
  return table;
}

std::string stem_hindi_word(const std::string& token) {
  const std::u32string cps = utf8_decode(token);
  if (cps.empty() || !std::all_of(cps.begin(), cps.end(), is_devanagari)) return token;
  for (const auto& suffix : hindi_suffixes()) {
    if (cps.size() >= suffix.size() + 2 && cps.compare(cps.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return utf8_encode(cps.substr(0, cps.size() - suffix.size()));
    }
  }
  return token;
}

Tokens stem_hindi(const Tokens& tokens) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(stem_hindi_word(t));
  return out;
}

}  // namespace zst
