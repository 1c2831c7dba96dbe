// SPDX-License-Identifier: Apache-2.0
#include "zst/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <sstream>

#include "zst/error.hpp"

namespace zst {

namespace fs = std::filesystem;

void TrainingConfig::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(key) + " must be positive");
  };
  positive(learning_rate, "learning-rate");
  positive(epsilon, "epsilon");
  positive(clip_norm, "clip-norm");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch-size must be at least 1");
  if (max_sentence_len < 1) throw ConfigError("max-sentence-len must be at least 1");
  if (hidden < 1 || embed_dim < 1 || layers < 1) throw ConfigError("hidden, embed-dim and layers must be at least 1");
  if (max_decode_len < 1) throw ConfigError("max-decode-len must be at least 1");
  if (bleu_smoothing != "none" && bleu_smoothing != "add-one-on-zero") {
    throw ConfigError("bleu-smoothing must be none or add-one-on-zero");
  }
}

AdamOptions TrainingConfig::adam() const { return {learning_rate, beta1, beta2, epsilon, amsgrad}; }

ModelConfig TrainingConfig::model(std::size_t vocab_size) const {
  ModelConfig m;
  m.vocab_size = vocab_size;
  m.embed_dim = embed_dim;
  m.hidden = hidden;
  m.layers = layers;
  m.bidirectional = bidirectional;
  return m;
}

TrainingState initialize_training(const TrainingConfig& config, const Vocabulary& vocab,
                                  const Tensor* initial_embedding) {
  config.validate();
  TrainingState s;
  s.config = config;
  s.params = ModelParams::initialize(config.model(vocab.size()), config.seed);
  s.params.vocab_hash = vocab.content_hash();
  if (initial_embedding) {
    if (initial_embedding->shape() != s.params.embedding.shape()) {
      throw DimensionError("initial embedding " + shape_string(initial_embedding->shape()) + " does not match " +
                           shape_string(s.params.embedding.shape()));
    }
    s.params.embedding = *initial_embedding;
  }
  s.optimizer = AdamState::zeros_like(s.params.tensors(), config.adam());
  s.rng.seed(config.seed ^ 0x9E3779B97F4A7C15ULL);
  return s;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const SentencePair> pool, std::size_t batch_size,
                                                   std::mt19937_64& rng) {
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  // bucket: sort windows of shuffled pairs by source length, then cut batches
  const std::size_t window = batch_size * 16;
  for (std::size_t start = 0; start < order.size(); start += window) {
    auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + window));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) { return pool[a].source.size() < pool[b].source.size(); });
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch_size)));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

BatchGradients batch_gradients(const ModelParams& params, const Batch& batch, const DecoderInputObserver& observer) {
  Tape tape;
  ParamVars vars = bind(tape, params);
  Var loss = sequence_loss(vars, batch, observer);
  BatchGradients out;
  out.loss = loss.value()[0];
  out.tokens = batch.token_count();
  if (!std::isfinite(out.loss)) return out;
  tape.backward(loss);
  for (const Var& v : vars.all()) out.grads.push_back(tape.grad(v));
  return out;
}

void train(TrainingState& state, std::span<const SentencePair> pool, const Vocabulary& vocab,
           const TrainOptions& options) {
  state.config.validate();
  if (pool.empty()) throw ContractError("train: no training pairs");
  if (state.params.config.vocab_size != vocab.size()) {
    throw CompatibilityError("model vocabulary size differs from the training vocabulary");
  }
  if (!options.checkpoint_dir.empty()) fs::create_directories(options.checkpoint_dir);

  std::vector<Tensor*> tensors = state.params.tensors();
  const std::size_t trainable_rows = 4 + vocab.languages().size();
  while (state.epoch < state.config.epochs) {
    const std::size_t epoch = state.epoch + 1;
    const auto batches = make_batches(pool, state.config.batch_size, state.rng);
    double weighted = 0.0;
    std::size_t tokens = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<SentencePair> members;
      members.reserve(batches[b].size());
      for (std::size_t i : batches[b]) members.push_back(pool[i]);
      const Batch batch = encode_batch(members, vocab);
      BatchGradients g;
      try {
        g = batch_gradients(state.params, batch, options.decoder_inputs);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) +
                           ": " + e.what());
      }
      if (!std::isfinite(g.loss)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) +
                           ": loss is not finite");
      }
      if (state.config.freeze_embeddings) {
        // word rows stay fixed; specials and routing tokens keep learning
        Tensor& ge = g.grads.front();
        for (std::size_t r = trainable_rows; r < ge.rows(); ++r)
          for (double& v : ge.row(r)) v = 0.0;
      }
      clip_global_norm(g.grads, state.config.clip_norm);
      adam_step(tensors, g.grads, state.optimizer);
      weighted += g.loss * static_cast<double>(g.tokens);
      tokens += g.tokens;
    }
    state.epoch = epoch;
    state.loss_log.push_back({epoch, weighted / static_cast<double>(tokens)});
    if (!options.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch-%03zu.ckpt", epoch);
      save_checkpoint(state, options.checkpoint_dir / name);
    }
    if (options.on_epoch) options.on_epoch(state);
  }
}

TrainingState train(std::span<const std::vector<SentencePair>> corpora, const TrainingConfig& config,
                    const Vocabulary& vocab, const Tensor* initial_embedding, const TrainOptions& options) {
  std::vector<SentencePair> pool;
  for (const auto& c : corpora) pool.insert(pool.end(), c.begin(), c.end());
  TrainingState state = initialize_training(config, vocab, initial_embedding);
  train(state, pool, vocab, options);
  return state;
}

std::string emit_loss_log(std::span<const LossRecord> log) {
  if (log.empty()) throw ContractError("emit_loss_log: empty loss log");
  std::ostringstream os;
  os << "epoch,mean_loss\n";
  char buf[64];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.6g\n", r.epoch, r.mean_loss);
    os << buf;
  }
  return os.str();
}

std::uint64_t parameter_hash(const ModelParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : params.named()) {
    for (double v : t->data()) {
      unsigned char bytes[sizeof v];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace zst
