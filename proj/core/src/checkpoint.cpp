// SPDX-License-Identifier: Apache-2.0
// Checkpoint layout:
//   8 bytes   magic "ZSTCKPT1"
//   8 bytes   little-endian u64 metadata length L
//   L bytes   metadata text, one key=value per line; `tensor=` lines give
//             name:shape:offset:count into the payload (offsets in doubles)
//   payload   little-endian IEEE-754 doubles in manifest order
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "zst/error.hpp"
#include "zst/training.hpp"

namespace zst {

namespace fs = std::filesystem;

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

struct TensorEntry {
  Shape shape;
  std::size_t offset = 0;
  std::size_t count = 0;
};

std::vector<std::pair<std::string, const Tensor*>> manifest(const TrainingState& s) {
  auto out = s.params.named();
  const auto names = s.params.named();
  for (std::size_t i = 0; i < names.size(); ++i) out.emplace_back("adam.m/" + names[i].first, &s.optimizer.m[i]);
  for (std::size_t i = 0; i < names.size(); ++i) out.emplace_back("adam.v/" + names[i].first, &s.optimizer.v[i]);
  if (s.optimizer.options.amsgrad) {
    for (std::size_t i = 0; i < names.size(); ++i) out.emplace_back("adam.vmax/" + names[i].first, &s.optimizer.v_max[i]);
  }
  return out;
}

std::string shape_field(const Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

[[noreturn]] void corrupt(const fs::path& path, const std::string& why) {
  throw FormatError("checkpoint " + path.string() + ": " + why);
}

std::size_t parse_count(const fs::path& path, const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) corrupt(path, "bad integer '" + s + "'");
  return static_cast<std::size_t>(std::strtoull(s.c_str(), nullptr, 10));
}

}  // namespace

void save_checkpoint(const TrainingState& s, const fs::path& path) {
  std::ostringstream meta;
  meta << "format_version=" << kCheckpointVersion << '\n';
  meta << "vocab_hash=" << hex64(s.params.vocab_hash) << '\n';
  meta << "vocab_size=" << s.params.config.vocab_size << '\n';
  meta << "epoch=" << s.epoch << '\n';
  meta << "adam.step=" << s.optimizer.step_count << '\n';
  for (const auto& k : TrainingConfig::keys()) meta << "config." << k << '=' << s.config.get(k) << '\n';
  {
    std::ostringstream rng;
    rng << s.rng;
    meta << "rng=" << rng.str() << '\n';
  }
  for (const auto& r : s.loss_log) meta << "loss=" << r.epoch << ':' << hexfloat(r.mean_loss) << '\n';

  std::string payload;
  std::size_t offset = 0;
  for (const auto& [name, t] : manifest(s)) {
    meta << "tensor=" << name << ':' << shape_field(t->shape()) << ':' << offset << ':' << t->size() << '\n';
    for (double v : t->data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_u64(payload, bits);
    }
    offset += t->size();
  }
  meta << "payload_bytes=" << payload.size() << '\n';

  const std::string m = meta.str();
  std::string blob(kCheckpointMagic, 8);
  put_u64(blob, m.size());
  blob += m;
  blob += payload;

  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  fs::rename(tmp, path);
}

TrainingState load_checkpoint(const fs::path& path, const Vocabulary* expected_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());

  if (blob.size() < 16 || std::memcmp(blob.data(), kCheckpointMagic, 8) != 0) corrupt(path, "bad magic");
  const std::uint64_t meta_len = get_u64(bytes + 8);
  if (meta_len > blob.size() - 16) corrupt(path, "truncated metadata");
  const std::string meta = blob.substr(16, static_cast<std::size_t>(meta_len));
  const std::size_t payload_start = 16 + static_cast<std::size_t>(meta_len);

  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, TensorEntry>> tensors;
  std::vector<LossRecord> losses;
  std::istringstream lines(meta);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) corrupt(path, "malformed metadata line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "tensor") {
      // name:shape:offset:count, name itself has no ':'
      std::vector<std::string> f;
      std::size_t start = 0;
      for (;;) {
        const auto c = value.find(':', start);
        f.push_back(value.substr(start, c == std::string::npos ? std::string::npos : c - start));
        if (c == std::string::npos) break;
        start = c + 1;
      }
      if (f.size() != 4) corrupt(path, "malformed tensor entry '" + value + "'");
      TensorEntry e;
      std::size_t s0 = 0;
      for (;;) {
        const auto x = f[1].find('x', s0);
        e.shape.push_back(parse_count(path, f[1].substr(s0, x == std::string::npos ? std::string::npos : x - s0)));
        if (x == std::string::npos) break;
        s0 = x + 1;
      }
      e.offset = parse_count(path, f[2]);
      e.count = parse_count(path, f[3]);
      tensors.emplace_back(f[0], e);
    } else if (key == "loss") {
      const auto c = value.find(':');
      if (c == std::string::npos) corrupt(path, "malformed loss entry");
      losses.push_back({parse_count(path, value.substr(0, c)), std::strtod(value.c_str() + c + 1, nullptr)});
    } else {
      kv[key] = value;
    }
  }

  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) corrupt(path, "missing metadata key '" + key + "'");
    return it->second;
  };
  if (need("format_version") != std::to_string(kCheckpointVersion)) {
    throw CompatibilityError("checkpoint " + path.string() + " has format version " + need("format_version") +
                             ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  const std::size_t payload_bytes = parse_count(path, need("payload_bytes"));
  if (blob.size() - payload_start != payload_bytes) {
    corrupt(path, "payload is " + std::to_string(blob.size() - payload_start) + " bytes, expected " +
                      std::to_string(payload_bytes));
  }
  const std::uint64_t vocab_hash = std::strtoull(need("vocab_hash").c_str(), nullptr, 16);
  if (expected_vocab && expected_vocab->content_hash() != vocab_hash) {
    throw CompatibilityError("checkpoint " + path.string() + " was trained with a different vocabulary");
  }

  TrainingState s;
  for (const auto& k : TrainingConfig::keys()) {
    try {
      s.config.set(k, need("config." + k));
    } catch (const ConfigError& e) {
      corrupt(path, e.what());
    }
  }
  s.epoch = parse_count(path, need("epoch"));
  s.loss_log = std::move(losses);
  {
    std::istringstream rng(need("rng"));
    rng >> s.rng;
    if (!rng) corrupt(path, "bad RNG state");
  }
  s.params = ModelParams::initialize(s.config.model(parse_count(path, need("vocab_size"))), 0);
  s.params.vocab_hash = vocab_hash;
  s.optimizer = AdamState::zeros_like(s.params.tensors(), s.config.adam());
  s.optimizer.step_count = parse_count(path, need("adam.step"));

  std::map<std::string, Tensor*> slots;
  {
    const auto names = s.params.named();
    for (std::size_t i = 0; i < names.size(); ++i) {
      slots[names[i].name] = names[i].tensor;
      slots["adam.m/" + names[i].name] = &s.optimizer.m[i];
      slots["adam.v/" + names[i].name] = &s.optimizer.v[i];
      if (s.config.amsgrad) slots["adam.vmax/" + names[i].name] = &s.optimizer.v_max[i];
    }
  }
  if (tensors.size() != slots.size()) {
    corrupt(path, "holds " + std::to_string(tensors.size()) + " tensors, model needs " + std::to_string(slots.size()));
  }
  const std::size_t total = payload_bytes / 8;
  for (const auto& [name, e] : tensors) {
    auto it = slots.find(name);
    if (it == slots.end()) corrupt(path, "unexpected tensor '" + name + "'");
    Tensor& t = *it->second;
    if (t.shape() != e.shape || e.count != t.size() || e.offset + e.count > total) {
      corrupt(path, "tensor '" + name + "' has shape " + shape_string(e.shape) + ", expected " +
                        shape_string(t.shape()));
    }
    auto d = t.data();
    for (std::size_t i = 0; i < e.count; ++i) {
      const std::uint64_t bits = get_u64(bytes + payload_start + 8 * (e.offset + i));
      std::memcpy(&d[i], &bits, sizeof bits);
    }
    slots.erase(it);
  }
  return s;
}

}  // namespace zst
