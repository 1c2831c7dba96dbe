// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "zst/bleu.hpp"
#include "zst/demo.hpp"
#include "zst/embeddings.hpp"
#include "zst/error.hpp"
#include "zst/inference.hpp"
#include "zst/text.hpp"
#include "zst/version.hpp"

namespace zst::cli {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

/// Config file plus per-key flags. Flags are kept as text and applied last.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "key=value configuration file");
    for (const auto& key : TrainingConfig::keys()) app->add_option("--" + key, values[key], "overrides config key " + key);
  }

  TrainingConfig resolve(TrainingConfig base) const {
    if (!file.empty()) base.apply_file(file);
    for (const auto& [k, v] : values)
      if (!v.empty()) base.set(k, v);
    base.validate();
    return base;
  }

  bool given(const std::string& key) const {
    auto it = values.find(key);
    return it != values.end() && !it->second.empty();
  }
};

bool stems(bool flag, const std::string& lang) { return flag && lang == "hi"; }

// ---- preprocess ----

struct PreprocessArgs {
  std::vector<std::string> corpora;  // "src-tgt=path"
  std::string out_dir;
  std::size_t min_count = 1;
  std::size_t max_vocab = 0;
  bool stem_hindi = false;
  ConfigFlags config;
};

int cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
  const TrainingConfig config = a.config.resolve({});
  RunManifest manifest;
  manifest.command = "preprocess";
  manifest.config_file = a.config.file;
  manifest.config = config;

  struct Loaded {
    std::string name, path;
    std::vector<SentencePair> pairs;
    std::size_t read = 0, dropped_empty = 0, removed = 0;
  };
  std::vector<Loaded> loaded;
  std::set<std::string> languages;
  for (const auto& spec : a.corpora) {
    const auto eq = spec.find('=');
    const auto dash = spec.find('-');
    if (eq == std::string::npos || dash == std::string::npos || dash > eq) {
      throw ConfigError("--corpus expects SRC-TGT=PATH, got '" + spec + "'");
    }
    Loaded l;
    const std::string src = spec.substr(0, dash);
    const std::string tgt = spec.substr(dash + 1, eq - dash - 1);
    if (!is_language_code(src) || !is_language_code(tgt)) throw ConfigError("bad language pair in '" + spec + "'");
    l.name = src + "-" + tgt;
    l.path = spec.substr(eq + 1);
    auto pairs = read_parallel_corpus(l.path, src, tgt, &l.dropped_empty);
    for (auto& p : pairs) {
      if (stems(a.stem_hindi, src)) p.source = stem_hindi(p.source);
      if (stems(a.stem_hindi, tgt)) p.target = stem_hindi(p.target);
    }
    l.read = pairs.size() + l.dropped_empty;
    l.pairs = filter_by_length(pairs, config.max_sentence_len);
    l.removed = pairs.size() - l.pairs.size();
    languages.insert(src);
    languages.insert(tgt);
    manifest.inputs.emplace_back("corpus." + l.name, l.path);
    loaded.push_back(std::move(l));
  }

  const std::vector<std::string> langs(languages.begin(), languages.end());
  std::vector<std::vector<SentencePair>> prepared;
  std::vector<SentencePair> all;
  for (auto& l : loaded) {
    for (auto& p : l.pairs) p.source = prepend_lang_token(p.source, p.target_lang, langs);
    prepared.push_back(l.pairs);
    all.insert(all.end(), l.pairs.begin(), l.pairs.end());
  }
  if (all.empty()) throw FormatError("no sentence pairs left after filtering");
  const Vocabulary vocab = build_vocab(prepared, a.min_count, a.max_vocab);

  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  write_prepared_pairs(dir / "train.pairs", all);
  vocab.save(dir / "vocab.txt");

  std::ostringstream report;
  std::size_t before = 0, removed = 0;
  for (const auto& l : loaded) {
    report << "corpus " << l.name << ": read " << l.read << ", empty " << l.dropped_empty << ", removed "
           << l.removed << ", kept " << l.pairs.size() << '\n';
    before += l.read - l.dropped_empty;
    removed += l.removed;
  }
  report << "max_sentence_len: " << config.max_sentence_len << '\n';
  report << "pairs_before: " << before << '\n';
  report << "removed: " << removed << '\n';
  report << "pairs_after: " << all.size() << '\n';
  report << "languages: " << join(langs, ",") << '\n';
  report << "vocab_size: " << vocab.size() << '\n';
  write_text(dir / "preprocess_report.txt", report.str());
  out << report.str();

  manifest.outputs = {{"pairs", (dir / "train.pairs").string()},
                      {"vocab", (dir / "vocab.txt").string()},
                      {"report", (dir / "preprocess_report.txt").string()}};
  manifest.write(dir);
  return 0;
}

// ---- compress-embeddings ----

struct CompressArgs {
  std::string input;
  std::string out_dir;
  std::size_t target_dim = 0;
  std::size_t removed_components = 0;
  bool no_post_process = false;
};

int cmd_compress(const CompressArgs& a, std::ostream& out) {
  VecLoadReport load_report;
  const EmbeddingTable table = load_vec(a.input, &load_report);
  CompressOptions o;
  o.target_dim = a.target_dim;
  o.removed_components = a.removed_components;
  o.post_process = !a.no_post_process;
  const EmbeddingTable small = compress(table, o);

  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  save_vec(small, dir / "embeddings.vec");
  std::ostringstream report;
  report << "words: " << small.word_count() << '\n';
  report << "duplicates_skipped: " << load_report.duplicates << '\n';
  report << "malformed_skipped: " << load_report.malformed << '\n';
  report << "input_dim: " << table.dim() << '\n';
  report << "output_dim: " << small.dim() << '\n';
  report << "stored_floats_before: " << table.stored_floats() << '\n';
  report << "stored_floats_after: " << small.stored_floats() << '\n';
  report << "post_process: " << (o.post_process ? "true" : "false") << '\n';
  write_text(dir / "compress_report.txt", report.str());
  out << report.str();

  RunManifest m;
  m.command = "compress-embeddings";
  m.inputs = {{"embeddings", a.input}};
  m.outputs = {{"embeddings", (dir / "embeddings.vec").string()}, {"report", (dir / "compress_report.txt").string()}};
  m.write(dir);
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string data;
  std::string vocab;
  std::string embeddings;
  std::string resume;
  std::string out_dir;
  ConfigFlags config;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const Vocabulary vocab = Vocabulary::load(a.vocab);
  const auto pairs = read_prepared_pairs(a.data);
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);

  RunManifest m;
  m.command = "train";
  m.config_file = a.config.file;
  m.inputs = {{"pairs", a.data}, {"vocab", a.vocab}};

  TrainingState state;
  if (!a.resume.empty()) {
    state = load_checkpoint(a.resume, &vocab);
    const TrainingConfig before = state.config;
    state.config = a.config.resolve(state.config);
    for (const char* key : {"hidden", "embed-dim", "layers", "bidirectional"}) {
      if (before.get(key) != state.config.get(key)) throw ConfigError(std::string("cannot change ") + key + " when resuming");
    }
    m.inputs.emplace_back("resume", a.resume);
  } else {
    const TrainingConfig config = a.config.resolve({});
    Tensor initial;
    if (!a.embeddings.empty()) {
      const EmbeddingTable table = load_vec(a.embeddings);
      if (table.dim() != config.embed_dim) {
        throw ConfigError("embeddings have dimension " + std::to_string(table.dim()) + " but embed-dim is " +
                          std::to_string(config.embed_dim));
      }
      initial = build_matrix(vocab, table, config.embed_dim, config.seed);
      m.inputs.emplace_back("embeddings", a.embeddings);
    }
    state = initialize_training(config, vocab, a.embeddings.empty() ? nullptr : &initial);
  }
  m.config = state.config;

  TrainOptions options;
  options.checkpoint_dir = dir / "checkpoints";
  options.on_epoch = [&](const TrainingState& s) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "epoch %zu/%zu mean_loss %.6f\n", s.epoch, s.config.epochs, s.loss_log.back().mean_loss);
    out << buf << std::flush;
  };
  train(state, pairs, vocab, options);

  save_checkpoint(state, dir / "model.ckpt");
  if (!state.loss_log.empty()) write_text(dir / "loss.csv", emit_loss_log(state.loss_log));
  m.outputs = {{"model", (dir / "model.ckpt").string()},
               {"checkpoints", options.checkpoint_dir.string()},
               {"loss_log", (dir / "loss.csv").string()}};
  m.write(dir);
  return 0;
}

// ---- translate ----

struct TranslateArgs {
  std::string checkpoint;
  std::string vocab;
  std::string input;
  std::string source_lang;
  std::string target_lang;
  std::string out_dir;
  bool attention = false;
  bool stem_hindi = false;
  std::size_t max_decode_len = 0;  // 0: the checkpoint's setting
};

int cmd_translate(const TranslateArgs& a, std::ostream& out) {
  const Vocabulary vocab = Vocabulary::load(a.vocab);
  const TrainingState state = load_checkpoint(a.checkpoint, &vocab);
  const std::size_t max_len = a.max_decode_len ? a.max_decode_len : state.config.max_decode_len;
  const auto lines = read_lines(a.input);
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);

  std::ostringstream translations;
  std::size_t capped = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Tokens source = tokenize(lines[i], a.source_lang);
    if (stems(a.stem_hindi, a.source_lang)) source = stem_hindi(source);
    const Translation t = greedy_translate(source, a.target_lang, state.params, vocab, max_len);
    if (t.ended_by == EndReason::LengthCap) ++capped;
    translations << join(t.tokens) << '\n';
    if (a.attention) {
      char name[32];
      std::snprintf(name, sizeof name, "%05zu.csv", i + 1);
      write_text(dir / "attention" / name, export_attention(t));
    }
  }
  write_text(dir / "translations.txt", translations.str());
  out << "sentences: " << lines.size() << '\n' << "length_capped: " << capped << '\n';

  RunManifest m;
  m.command = "translate";
  m.config = state.config;
  m.inputs = {{"checkpoint", a.checkpoint}, {"vocab", a.vocab}, {"source", a.input}};
  m.outputs = {{"translations", (dir / "translations.txt").string()}};
  if (a.attention) m.outputs.emplace_back("attention", (dir / "attention").string());
  m.write(dir);
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string hypotheses;
  std::string references;
  std::string smoothing = "none";
  std::string out_dir;
  bool percent = false;
  bool csv = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto hyp_lines = read_lines(a.hypotheses);
  const auto ref_lines = read_lines(a.references);
  if (hyp_lines.size() != ref_lines.size()) {
    throw FormatError(a.hypotheses + " has " + std::to_string(hyp_lines.size()) + " lines but " + a.references +
                      " has " + std::to_string(ref_lines.size()));
  }
  std::vector<Tokens> hyps, refs;
  for (const auto& l : hyp_lines) hyps.push_back(split_whitespace(l));
  for (const auto& l : ref_lines) refs.push_back(split_whitespace(l));
  const BleuReport r = bleu(hyps, refs, parse_smoothing(a.smoothing));
  out << r.to_text(a.percent);
  if (a.csv) out << BleuReport::csv_header() << '\n' << r.to_csv_row(a.percent) << '\n';

  if (!a.out_dir.empty()) {
    const fs::path dir = a.out_dir;
    write_text(dir / "bleu.txt", r.to_text(a.percent));
    RunManifest m;
    m.command = "evaluate";
    m.config.bleu_smoothing = a.smoothing;
    m.inputs = {{"hypotheses", a.hypotheses}, {"references", a.references}};
    m.outputs = {{"report", (dir / "bleu.txt").string()}};
    if (a.csv) {
      write_text(dir / "bleu.csv", BleuReport::csv_header() + "\n" + r.to_csv_row(a.percent) + "\n");
      m.outputs.emplace_back("csv", (dir / "bleu.csv").string());
    }
    m.write(dir);
  }
  return 0;
}

// ---- zeroshot-demo ----

struct DemoArgs {
  std::string out_dir;
  std::size_t train_pairs = 300;
  std::size_t test_pairs = 100;
  double alignment_noise = 0.3;
  bool no_pretrained = false;
  ConfigFlags config;
};

int cmd_demo(const DemoArgs& a, std::ostream& out) {
  DemoOptions o;
  o.config = a.config.resolve(DemoOptions::default_config());
  o.train_pairs = a.train_pairs;
  o.test_pairs = a.test_pairs;
  o.alignment_noise = a.alignment_noise;
  o.pretrained = !a.no_pretrained;

  TrainOptions t;
  t.on_epoch = [&](const TrainingState& s) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "epoch %zu/%zu mean_loss %.6f\n", s.epoch, s.config.epochs, s.loss_log.back().mean_loss);
    out << buf << std::flush;
  };
  const DemoReport r = run_zeroshot_demo(o, t);
  out << r.to_text();

  const fs::path dir = a.out_dir;
  fs::create_directories(dir);
  write_text(dir / "report.txt", r.to_text());
  write_text(dir / "loss.csv", emit_loss_log(r.loss_log));
  std::ostringstream tsv;
  tsv << "source\treference\thypothesis\n";
  for (std::size_t i = 0; i < r.hypotheses.size(); ++i)
    tsv << join(r.sources[i]) << '\t' << join(r.references[i]) << '\t' << join(r.hypotheses[i]) << '\n';
  write_text(dir / "zero_shot.tsv", tsv.str());

  RunManifest m;
  m.command = "zeroshot-demo";
  m.config_file = a.config.file;
  m.config = o.config;
  m.outputs = {{"report", (dir / "report.txt").string()},
               {"loss_log", (dir / "loss.csv").string()},
               {"translations", (dir / "zero_shot.tsv").string()}};
  m.write(dir);
  if (!r.passed()) {
    throw ContractError("zero-shot check failed: purity " + std::to_string(r.purity) + " (need >= 0.9), BLEU " +
                        std::to_string(r.zero_shot.score) + " vs shuffled baseline " +
                        std::to_string(r.baseline.score));
  }
  return 0;
}

}  // namespace

std::string RunManifest::to_text() const {
  std::ostringstream os;
  os << "command=" << command << '\n';
  os << "tool_version=" << kVersion << '\n';
  os << "timestamp=" << timestamp << '\n';
  os << "config_file=" << config_file << '\n';
  os << "seed=" << config.seed << '\n';
  for (const auto& k : TrainingConfig::keys()) os << "config." << k << '=' << config.get(k) << '\n';
  for (const auto& [k, v] : inputs) os << "input." << k << '=' << v << '\n';
  for (const auto& [k, v] : outputs) os << "output." << k << '=' << v << '\n';
  return os.str();
}

void RunManifest::write(const fs::path& out_dir) const {
  RunManifest stamped = *this;
  if (stamped.timestamp.empty()) stamped.timestamp = utc_now();
  write_text(out_dir / "manifest.txt", stamped.to_text());
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-shot multilingual neural machine translation toolkit", "zst"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "tokenize, length-filter, add routing tokens and build the vocabulary");
  p->add_option("--corpus", pre.corpora, "SRC-TGT=PATH, a .tsv file or the prefix of PATH.SRC/PATH.TGT")->required();
  p->add_option("--out-dir", pre.out_dir, "output directory")->required();
  p->add_option("--min-count", pre.min_count, "drop tokens seen fewer times");
  p->add_option("--max-vocab", pre.max_vocab, "cap on regular tokens, 0 for none");
  p->add_flag("--stem-hindi", pre.stem_hindi, "apply the light suffix stemmer to Hindi sides");
  pre.config.attach(p);

  CompressArgs comp;
  auto* c = app.add_subcommand("compress-embeddings", "PCA-compress a .vec embedding file");
  c->add_option("--input", comp.input, ".vec file")->required();
  c->add_option("--out-dir", comp.out_dir, "output directory")->required();
  c->add_option("--target-dim", comp.target_dim, "output dimension, 0 for half");
  c->add_option("--removed-components", comp.removed_components, "dominant components removed per pass, 0 for ceil(dim/100)");
  c->add_flag("--no-post-process", comp.no_post_process, "plain PCA");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train the shared encoder-decoder on preprocessed pairs");
  t->add_option("--data", tr.data, "train.pairs from preprocess")->required();
  t->add_option("--vocab", tr.vocab, "vocab.txt from preprocess")->required();
  t->add_option("--embeddings", tr.embeddings, ".vec file with embed-dim columns");
  t->add_option("--resume", tr.resume, "continue from a checkpoint");
  t->add_option("--out-dir", tr.out_dir, "output directory")->required();
  tr.config.attach(t);

  TranslateArgs tl;
  auto* l = app.add_subcommand("translate", "greedy translation of one sentence per line");
  l->add_option("--checkpoint", tl.checkpoint, "model checkpoint")->required();
  l->add_option("--vocab", tl.vocab, "vocabulary the model was trained with")->required();
  l->add_option("--input", tl.input, "source sentences, one per line")->required();
  l->add_option("--source-lang", tl.source_lang, "language code of the input")->required();
  l->add_option("--target-lang", tl.target_lang, "routing target language")->required();
  l->add_option("--out-dir", tl.out_dir, "output directory")->required();
  l->add_option("--max-decode-len", tl.max_decode_len, "length cap, default from the checkpoint");
  l->add_flag("--attention", tl.attention, "write one attention CSV per sentence");
  l->add_flag("--stem-hindi", tl.stem_hindi, "stem Hindi input as in preprocessing");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "corpus BLEU-4 of tokenized hypotheses against references");
  e->add_option("--hypotheses", ev.hypotheses, "one tokenized hypothesis per line")->required();
  e->add_option("--references", ev.references, "one tokenized reference per line")->required();
  e->add_option("--bleu-smoothing", ev.smoothing, "none or add-one-on-zero");
  e->add_option("--out-dir", ev.out_dir, "also write bleu.txt and a manifest here");
  e->add_flag("--percent", ev.percent, "report the score times 100");
  e->add_flag("--csv", ev.csv, "also emit a CSV row");

  DemoArgs dm;
  auto* d = app.add_subcommand("zeroshot-demo", "train on A->B and B->C toy languages, then translate A->C");
  d->add_option("--out-dir", dm.out_dir, "output directory")->required();
  d->add_option("--train-pairs", dm.train_pairs, "sentences per seen direction");
  d->add_option("--test-pairs", dm.test_pairs, "held-out A->C sentences");
  d->add_option("--alignment-noise", dm.alignment_noise, "per-word deviation of the aligned pseudo-pretrained vectors");
  d->add_flag("--no-pretrained", dm.no_pretrained, "random embeddings instead of aligned vectors");
  dm.config.attach(d);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*p) return cmd_preprocess(pre, out);
    if (*c) return cmd_compress(comp, out);
    if (*t) return cmd_train(tr, out);
    if (*l) return cmd_translate(tl, out);
    if (*e) return cmd_evaluate(ev, out);
    if (*d) return cmd_demo(dm, out);
  } catch (const ContractError& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  } catch (const IoError& ex) {
    err << "error: " << ex.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace zst::cli
