// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "zst/corpus.hpp"
#include "zst/model.hpp"

namespace zst {

enum class EndReason { EndToken, LengthCap };

struct Translation {
  Tokens tokens;        // surface tokens; never <s>, </s> or <pad>
  Tokens source;        // encoded source including the routing token
  Tensor attention;     // [output_len x source_len]; empty when no token was produced
  EndReason ended_by = EndReason::EndToken;
};

/// Greedy decoding: prepend <2target_lang>, encode, then feed back the
/// argmax token (lowest id on ties) until </s> or `max_len` tokens.
Translation greedy_translate(const Tokens& source, std::string_view target_lang, const ModelParams& model,
                             const Vocabulary& vocab, std::size_t max_len = 50);

/// Attention matrix as CSV: header row of source tokens, one row per output token.
std::string export_attention(const Translation& translation);

}  // namespace zst
