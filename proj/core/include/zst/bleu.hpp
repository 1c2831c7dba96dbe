// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "zst/text.hpp"

namespace zst {

enum class BleuSmoothing { None, AddOneOnZero };

BleuSmoothing parse_smoothing(std::string_view name);
std::string_view to_string(BleuSmoothing s);

struct BleuReport {
  std::array<std::size_t, 4> matches{};  // clipped n-gram matches per order
  std::array<std::size_t, 4> totals{};   // hypothesis n-grams per order
  std::array<double, 4> precisions{};    // after smoothing
  double brevity_penalty = 0.0;
  double score = 0.0;  // in [0, 1]
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;
  BleuSmoothing smoothing = BleuSmoothing::None;

  /// key=value lines; `percent` scales the score by 100 for display.
  std::string to_text(bool percent = false) const;
  static std::string csv_header();
  std::string to_csv_row(bool percent = false) const;
};

/// Corpus-level BLEU-4 with clipped counts, uniform weights and a single reference per hypothesis.
BleuReport bleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references,
                BleuSmoothing smoothing = BleuSmoothing::None);

}  // namespace zst
