// SPDX-License-Identifier: Apache-2.0
#include "zst/bleu.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

#include "zst/error.hpp"

namespace zst {

BleuSmoothing parse_smoothing(std::string_view name) {
  if (name == "none") return BleuSmoothing::None;
  if (name == "add-one-on-zero") return BleuSmoothing::AddOneOnZero;
  throw ConfigError("unknown BLEU smoothing '" + std::string(name) + "' (expected none or add-one-on-zero)");
}

std::string_view to_string(BleuSmoothing s) {
  return s == BleuSmoothing::None ? "none" : "add-one-on-zero";
}

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> key(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++counts[key];
  }
  return counts;
}

}  // namespace

BleuReport bleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references, BleuSmoothing smoothing) {
  if (hypotheses.size() != references.size()) {
    throw ContractError("bleu: " + std::to_string(hypotheses.size()) + " hypotheses but " +
                        std::to_string(references.size()) + " references");
  }
  if (hypotheses.empty()) throw ContractError("bleu: empty corpus");

  BleuReport r;
  r.smoothing = smoothing;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const Tokens& hyp = hypotheses[s];
    const Tokens& ref = references[s];
    r.hypothesis_length += hyp.size();
    r.reference_length += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const NgramCounts h = count_ngrams(hyp, n);
      const NgramCounts g = count_ngrams(ref, n);
      for (const auto& [gram, count] : h) {
        auto it = g.find(gram);
        if (it != g.end()) r.matches[n - 1] += std::min(count, it->second);
      }
      if (hyp.size() >= n) r.totals[n - 1] += hyp.size() - n + 1;
    }
  }

  const double c = static_cast<double>(r.hypothesis_length);
  const double ref_len = static_cast<double>(r.reference_length);
  r.brevity_penalty = c == 0.0 ? 0.0 : (c < ref_len ? std::exp(1.0 - ref_len / c) : 1.0);

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    double num = static_cast<double>(r.matches[n]);
    double den = static_cast<double>(r.totals[n]);
    if (num == 0.0 && smoothing == BleuSmoothing::AddOneOnZero) {
      num = 1.0;
      den += 1.0;
    }
    r.precisions[n] = den == 0.0 ? 0.0 : num / den;
    if (r.precisions[n] == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(r.precisions[n]);
    }
  }
  r.score = (zero || r.brevity_penalty == 0.0) ? 0.0 : r.brevity_penalty * std::exp(0.25 * log_sum);
  return r;
}

std::string BleuReport::to_text(bool percent) const {
  std::ostringstream os;
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  os << "bleu=" << fmt(percent ? 100.0 * score : score) << '\n';
  os << "scale=" << (percent ? "percent" : "unit") << '\n';
  for (std::size_t n = 0; n < 4; ++n) {
    os << "p" << n + 1 << '=' << fmt(precisions[n]) << '\n';
    os << "p" << n + 1 << "_counts=" << matches[n] << '/' << totals[n] << '\n';
  }
  os << "brevity_penalty=" << fmt(brevity_penalty) << '\n';
  os << "hypothesis_length=" << hypothesis_length << '\n';
  os << "reference_length=" << reference_length << '\n';
  os << "smoothing=" << to_string(smoothing) << '\n';
  return os.str();
}

std::string BleuReport::csv_header() {
  return "bleu,p1,p2,p3,p4,brevity_penalty,hypothesis_length,reference_length,smoothing";
}

std::string BleuReport::to_csv_row(bool percent) const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%zu,", percent ? 100.0 * score : score,
                precisions[0], precisions[1], precisions[2], precisions[3], brevity_penalty, hypothesis_length,
                reference_length);
  return std::string(buf) + std::string(to_string(smoothing));
}

}  // namespace zst
