// SPDX-License-Identifier: Apache-2.0
// Brute-force BLEU: every n-gram is counted by linear scans, no hashing or maps.
#pragma once

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "zst/bleu.hpp"

namespace zst::testing {

inline std::size_t occurrences(const Tokens& s, std::size_t start, std::size_t n, const Tokens& in) {
  std::size_t k = 0;
  for (std::size_t j = 0; j + n <= in.size(); ++j) {
    bool same = true;
    for (std::size_t q = 0; q < n && same; ++q) same = s[start + q] == in[j + q];
    k += same ? 1 : 0;
  }
  return k;
}

/// Clipped matches per order; each distinct n-gram is scored at its first occurrence.
inline std::array<std::size_t, 4> naive_clipped_matches(const std::vector<Tokens>& hyp,
                                                        const std::vector<Tokens>& ref) {
  std::array<std::size_t, 4> m{};
  for (std::size_t s = 0; s < hyp.size(); ++s) {
    for (std::size_t n = 1; n <= 4; ++n) {
      for (std::size_t i = 0; i + n <= hyp[s].size(); ++i) {
        bool first = true;
        for (std::size_t j = 0; j < i && first; ++j) {
          bool same = true;
          for (std::size_t q = 0; q < n && same; ++q) same = hyp[s][i + q] == hyp[s][j + q];
          first = !same;
        }
        if (!first) continue;
        const std::size_t h = occurrences(hyp[s], i, n, hyp[s]);
        const std::size_t r = occurrences(hyp[s], i, n, ref[s]);
        m[n - 1] += h < r ? h : r;
      }
    }
  }
  return m;
}

struct NaiveBleu {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  double brevity_penalty = 0.0;
  double score = 0.0;
};

inline NaiveBleu naive_bleu(const std::vector<Tokens>& hyp, const std::vector<Tokens>& ref, BleuSmoothing mode) {
  NaiveBleu out;
  out.matches = naive_clipped_matches(hyp, ref);
  std::size_t c = 0, r = 0;
  for (std::size_t s = 0; s < hyp.size(); ++s) {
    c += hyp[s].size();
    r += ref[s].size();
    for (std::size_t n = 1; n <= 4; ++n)
      if (hyp[s].size() >= n) out.totals[n - 1] += hyp[s].size() - n + 1;
  }
  const double cd = static_cast<double>(c), rd = static_cast<double>(r);
  out.brevity_penalty = c == 0 ? 0.0 : (c < r ? std::exp(1.0 - rd / cd) : 1.0);
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    double num = static_cast<double>(out.matches[n]), den = static_cast<double>(out.totals[n]);
    if (num == 0.0 && mode == BleuSmoothing::AddOneOnZero) {
      num += 1.0;
      den += 1.0;
    }
    const double p = den == 0.0 ? 0.0 : num / den;
    if (p == 0.0) zero = true;
    else log_sum += std::log(p);
  }
  out.score = (zero || out.brevity_penalty == 0.0) ? 0.0 : out.brevity_penalty * std::exp(0.25 * log_sum);
  return out;
}

/// Short sentences over a 6-word alphabet, so higher-order matches are common.
inline std::pair<std::vector<Tokens>, std::vector<Tokens>> random_corpus(std::mt19937_64& rng, std::size_t sentences) {
  static const char* words[] = {"a", "b", "c", "d", "e", "f"};
  auto sentence = [&](std::size_t max_len) {
    Tokens t(rng() % (max_len + 1));
    for (auto& w : t) w = words[rng() % 6];
    return t;
  };
  std::vector<Tokens> hyp, ref;
  for (std::size_t i = 0; i < sentences; ++i) {
    hyp.push_back(sentence(9));
    ref.push_back(sentence(9));
  }
  return {hyp, ref};
}

}  // namespace zst::testing
