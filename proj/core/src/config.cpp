// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "zst/error.hpp"
#include "zst/training.hpp"

namespace zst {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": '" + v + "' is not a number");
  return out;
}

template <typename T>
T to_unsigned(const std::string& key, const std::string& v) {
  T out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

// shortest text that reads back to the same double
std::string num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

const std::vector<std::string>& TrainingConfig::keys() {
  static const std::vector<std::string> k = {
      "learning-rate", "beta1",      "beta2",         "epsilon",          "amsgrad", "epochs",
      "batch-size",    "hidden",     "embed-dim",     "layers",           "bidirectional",
      "max-sentence-len", "clip-norm", "seed",        "max-decode-len",   "bleu-smoothing",
      "freeze-embeddings"};
  return k;
}

void TrainingConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "learning-rate") learning_rate = to_double(key, v);
  else if (key == "beta1") beta1 = to_double(key, v);
  else if (key == "beta2") beta2 = to_double(key, v);
  else if (key == "epsilon") epsilon = to_double(key, v);
  else if (key == "amsgrad") amsgrad = to_bool(key, v);
  else if (key == "epochs") epochs = to_unsigned<std::size_t>(key, v);
  else if (key == "batch-size") batch_size = to_unsigned<std::size_t>(key, v);
  else if (key == "hidden") hidden = to_unsigned<std::size_t>(key, v);
  else if (key == "embed-dim") embed_dim = to_unsigned<std::size_t>(key, v);
  else if (key == "layers") layers = to_unsigned<std::size_t>(key, v);
  else if (key == "bidirectional") bidirectional = to_bool(key, v);
  else if (key == "max-sentence-len") max_sentence_len = to_unsigned<std::size_t>(key, v);
  else if (key == "clip-norm") clip_norm = to_double(key, v);
  else if (key == "seed") seed = to_unsigned<std::uint64_t>(key, v);
  else if (key == "max-decode-len") max_decode_len = to_unsigned<std::size_t>(key, v);
  else if (key == "bleu-smoothing") bleu_smoothing = v;
  else if (key == "freeze-embeddings") freeze_embeddings = to_bool(key, v);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

std::string TrainingConfig::get(const std::string& key) const {
  if (key == "learning-rate") return num(learning_rate);
  if (key == "beta1") return num(beta1);
  if (key == "beta2") return num(beta2);
  if (key == "epsilon") return num(epsilon);
  if (key == "amsgrad") return amsgrad ? "true" : "false";
  if (key == "epochs") return std::to_string(epochs);
  if (key == "batch-size") return std::to_string(batch_size);
  if (key == "hidden") return std::to_string(hidden);
  if (key == "embed-dim") return std::to_string(embed_dim);
  if (key == "layers") return std::to_string(layers);
  if (key == "bidirectional") return bidirectional ? "true" : "false";
  if (key == "max-sentence-len") return std::to_string(max_sentence_len);
  if (key == "clip-norm") return num(clip_norm);
  if (key == "seed") return std::to_string(seed);
  if (key == "max-decode-len") return std::to_string(max_decode_len);
  if (key == "bleu-smoothing") return bleu_smoothing;
  if (key == "freeze-embeddings") return freeze_embeddings ? "true" : "false";
  throw ConfigError("unknown configuration key '" + key + "'");
}

TrainingConfig TrainingConfig::parse(const std::string& text) {
  TrainingConfig c;
  c.apply(text);
  return c;
}

void TrainingConfig::apply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

TrainingConfig TrainingConfig::load(const std::filesystem::path& path) {
  TrainingConfig c;
  c.apply_file(path);
  return c;
}

void TrainingConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply(ss.str());
}

std::string TrainingConfig::to_text() const {
  std::string out;
  for (const auto& k : keys()) out += k + "=" + get(k) + "\n";
  return out;
}

}  // namespace zst
