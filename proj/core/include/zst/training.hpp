// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "zst/corpus.hpp"
#include "zst/model.hpp"
#include "zst/optim.hpp"

namespace zst {

/// Every tunable of a run. Keys in files and on the command line are the
/// kebab-case spellings listed by `keys()`.
struct TrainingConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  bool amsgrad = false;
  std::size_t epochs = 10;
  std::size_t batch_size = 4;
  std::size_t max_sentence_len = 30;
  std::size_t hidden = 128;
  std::size_t embed_dim = 150;
  std::size_t layers = 4;
  bool bidirectional = true;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  std::size_t max_decode_len = 50;
  std::string bleu_smoothing = "none";
  bool freeze_embeddings = false;  // word rows fixed; special and routing-token rows still train

  void validate() const;
  AdamOptions adam() const;
  ModelConfig model(std::size_t vocab_size) const;

  static const std::vector<std::string>& keys();
  /// Sets one key from its text form; ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  /// key=value lines, `#` comments, blank lines ignored.
  static TrainingConfig parse(const std::string& text);
  static TrainingConfig load(const std::filesystem::path& path);
  /// Same syntax, layered over the current values.
  void apply(const std::string& text);
  void apply_file(const std::filesystem::path& path);
  std::string to_text() const;
};

struct LossRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
};

/// Everything needed to resume or reproduce a run.
struct TrainingState {
  TrainingConfig config;
  ModelParams params;
  AdamState optimizer;
  std::size_t epoch = 0;
  std::mt19937_64 rng;
  std::vector<LossRecord> loss_log;
};

/// Fresh model and optimizer. `initial_embedding`, when given, must be [|V| x embed_dim].
TrainingState initialize_training(const TrainingConfig& config, const Vocabulary& vocab,
                                  const Tensor* initial_embedding = nullptr);

struct TrainOptions {
  std::filesystem::path checkpoint_dir;  // empty: no per-epoch checkpoints
  std::function<void(const TrainingState&)> on_epoch;
  DecoderInputObserver decoder_inputs;    // instrumentation hook
};

/// Length-bucketed batches of shuffled pool indices, in training order.
std::vector<std::vector<std::size_t>> make_batches(std::span<const SentencePair> pool, std::size_t batch_size,
                                                   std::mt19937_64& rng);

/// Runs the remaining epochs of `state` over the pooled corpora with teacher
/// forcing, gradient clipping and Adam.
void train(TrainingState& state, std::span<const SentencePair> pool, const Vocabulary& vocab,
           const TrainOptions& options = {});

/// Convenience: pools every corpus and trains from scratch.
TrainingState train(std::span<const std::vector<SentencePair>> corpora, const TrainingConfig& config,
                    const Vocabulary& vocab, const Tensor* initial_embedding = nullptr,
                    const TrainOptions& options = {});

/// Gradients of the mean token loss of one batch, in ModelParams::named() order.
struct BatchGradients {
  double loss = 0.0;
  std::size_t tokens = 0;
  std::vector<Tensor> grads;
};
BatchGradients batch_gradients(const ModelParams& params, const Batch& batch,
                               const DecoderInputObserver& observer = {});

/// "epoch,mean_loss" CSV with 6 significant digits.
std::string emit_loss_log(std::span<const LossRecord> log);

inline constexpr char kCheckpointMagic[9] = "ZSTCKPT1";
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const TrainingState& state, const std::filesystem::path& path);
/// Rejects bad magic, truncation, unknown versions and, when `expected_vocab`
/// is given, checkpoints trained on a different vocabulary.
TrainingState load_checkpoint(const std::filesystem::path& path, const Vocabulary* expected_vocab = nullptr);

/// FNV-1a over every parameter byte, in named order.
std::uint64_t parameter_hash(const ModelParams& params);

}  // namespace zst
