// SPDX-License-Identifier: Apache-2.0
#include "zst/inference.hpp"

#include <cstdio>
#include <sstream>

#include "zst/error.hpp"

namespace zst {

Translation greedy_translate(const Tokens& source, std::string_view target_lang, const ModelParams& model,
                             const Vocabulary& vocab, std::size_t max_len) {
  if (source.empty()) throw ContractError("greedy_translate: empty source sentence");
  if (model.config.vocab_size != vocab.size()) {
    throw CompatibilityError("model has " + std::to_string(model.config.vocab_size) + " output classes but vocabulary has " +
                             std::to_string(vocab.size()) + " tokens");
  }
  if (model.vocab_hash != 0 && model.vocab_hash != vocab.content_hash()) {
    throw CompatibilityError("model was trained with a different vocabulary");
  }
  if (max_len == 0) throw ContractError("greedy_translate: max_len must be positive");

  Translation out;
  out.source = prepend_lang_token(source, target_lang, vocab.languages());
  const std::vector<int> ids = vocab.encode(out.source);
  const std::size_t S = ids.size();

  Tape tape(false);
  ParamVars p = bind(tape, model);
  const std::size_t lengths[] = {S};
  EncodedSource encoded = encode(p, ids, lengths, S);
  LstmState state = encoded.initial_decoder_state;

  std::vector<double> attention;
  int previous = Vocabulary::kBos;
  out.ended_by = EndReason::LengthCap;
  for (std::size_t step = 0; step < max_len; ++step) {
    const int prev[] = {previous};
    DecoderStep ds = decoder_step(p, prev, state, encoded);
    Var logits = project_output(p, ds.features);
    state = ds.state;
    const int next = static_cast<int>(argmax(logits.value().data()));
    if (next == Vocabulary::kEos) {
      out.ended_by = EndReason::EndToken;
      break;
    }
    previous = next;
    // <s> and <pad> are fed back but never surface
    if (next == Vocabulary::kBos || next == Vocabulary::kPad) continue;
    auto w = ds.attention.weights.value().data();
    attention.insert(attention.end(), w.begin(), w.end());
    out.tokens.push_back(vocab.token(next));
  }
  if (!out.tokens.empty()) out.attention = Tensor({out.tokens.size(), S}, std::move(attention));
  return out;
}

std::string export_attention(const Translation& t) {
  std::ostringstream os;
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  os << "output";
  for (const auto& s : t.source) os << ',' << quote(s);
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    os << quote(t.tokens[i]);
    for (double v : t.attention.row(i)) {
      std::snprintf(buf, sizeof buf, ",%.6g", v);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace zst
