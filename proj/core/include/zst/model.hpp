// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zst/autodiff.hpp"
#include "zst/corpus.hpp"
#include "zst/tensor.hpp"

namespace zst {

inline constexpr double kWeightInitBound = 0.08;
/// Wider than the weights so the input signal survives a deep encoder stack.
inline constexpr double kEmbeddingInitBound = 1.0;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 150;
  std::size_t hidden = 128;
  std::size_t layers = 4;
  bool bidirectional = true;
  std::size_t attention_dim = 0;  // 0: same as hidden

  std::size_t directions() const noexcept { return bidirectional ? 2 : 1; }
  std::size_t annotation_dim() const noexcept { return directions() * hidden; }
  std::size_t attention_size() const noexcept { return attention_dim ? attention_dim : hidden; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Gate order inside the 4h columns: input, forget, candidate, output.
struct LstmCellParams {
  Tensor W;  // [input_dim x 4h]
  Tensor U;  // [h x 4h]
  Tensor b;  // [4h]

  friend bool operator==(const LstmCellParams&, const LstmCellParams&) = default;
};

struct EncoderLayer {
  std::vector<LstmCellParams> directions;  // forward, then backward when bidirectional

  friend bool operator==(const EncoderLayer&, const EncoderLayer&) = default;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

/// Every trainable tensor of the translator. One set is shared by all
/// language pairs; the routing token is the only target-language signal.
struct ModelParams {
  ModelConfig config;
  Tensor embedding;                  // [V x d]
  std::vector<EncoderLayer> encoder;
  Tensor bridge_W;                   // [annotation_dim x h]
  Tensor bridge_b;                   // [h]
  LstmCellParams decoder;            // input_dim = d
  Tensor attention_W1;               // [annotation_dim x a]
  Tensor attention_W2;               // [h x a]
  Tensor attention_v;                // [a x 1]
  Tensor output_W;                   // [(h + annotation_dim) x V]
  Tensor output_b;                   // [V]
  std::uint64_t vocab_hash = 0;      // Vocabulary::content_hash() of the training vocabulary; 0 if unknown

  /// uniform(-0.08, 0.08) weights, uniform(-1, 1) embeddings with a zero
  /// <pad> row, zero biases except forget gates at 1.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  /// Fixed-order listing used by the optimizer, checkpoints and gradient checks.
  std::vector<NamedTensor> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::vector<Tensor*> tensors();
  std::size_t parameter_count() const;

  /// Exact equality of every tensor, the config and the vocabulary hash.
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// ---- graph construction (batched, tape-recorded) ----

struct LstmVars {
  Var W, U, b;
};

struct ParamVars {
  const ModelConfig* config = nullptr;
  Var embedding;
  std::vector<std::vector<LstmVars>> encoder;
  Var bridge_W, bridge_b;
  LstmVars decoder;
  Var attention_W1, attention_W2, attention_v;
  Var output_W, output_b;

  /// Same order as ModelParams::named().
  std::vector<Var> all() const;
};

/// Binds every parameter of `params` to `tape` (borrowed, not copied).
ParamVars bind(Tape& tape, const ModelParams& params);
/// Regroups handles listed in ModelParams::named() order.
ParamVars unflatten(const ModelConfig& config, std::span<const Var> vars);

struct LstmState {
  Var h;  // [B x h]
  Var c;  // [B x h]
};

LstmState lstm_step(Var x, const LstmState& previous, const LstmVars& p, std::size_t hidden);

struct EncodedSource {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<Var> annotations;  // per position, [B x annotation_dim]
  std::vector<Var> keys;         // per position, annotation * W1
  Tensor mask;                   // [B x S], 1 on real source positions
  LstmState initial_decoder_state;
};

/// Runs the stacked (Bi)LSTM over padded row-major `source_ids` [B x S].
EncodedSource encode(const ParamVars& p, std::span<const int> source_ids, std::span<const std::size_t> lengths,
                     std::size_t length);

struct AttentionResult {
  Var weights;  // [B x S]
  Var context;  // [B x annotation_dim]
};

/// Additive scoring v^T tanh(W1 a_s + W2 h), softmax over real positions.
AttentionResult attend(const ParamVars& p, Var decoder_h, const EncodedSource& source);

struct DecoderStep {
  LstmState state;
  AttentionResult attention;
  Var features;  // [B x (h + annotation_dim)] = [h; context]
};

DecoderStep decoder_step(const ParamVars& p, std::span<const int> previous_ids, const LstmState& state,
                         const EncodedSource& source);
Var project_output(const ParamVars& p, Var features);

/// Called once per decoder step with the token ids fed to the decoder.
using DecoderInputObserver = std::function<void(std::size_t step, std::span<const int> inputs)>;

/// Teacher-forced mean per-token cross-entropy over the unmasked target positions.
Var sequence_loss(const ParamVars& p, const Batch& batch, const DecoderInputObserver& observer = {});

// ---- single-sentence evaluation (no gradients) ----

std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                                    const LstmCellParams& p);

struct EncoderOutput {
  Tensor annotations;  // [S x annotation_dim]
  Tensor final_h;      // [h]
  Tensor final_c;      // [h]
};
EncoderOutput encode(std::span<const int> source_ids, const ModelParams& params);

struct AttentionOutput {
  Tensor weights;  // [S]
  Tensor context;  // [annotation_dim]
};
AttentionOutput attention(const Tensor& decoder_h, const Tensor& annotations, const ModelParams& params);

struct DecodeStepOutput {
  Tensor logits;     // [V]
  Tensor h;
  Tensor c;
  Tensor attention;  // [S]
};
DecodeStepOutput decode_step(int previous_id, const Tensor& h, const Tensor& c, const Tensor& annotations,
                             const ModelParams& params);

/// Token-averaged -sum_w sum_e y_we log softmax(logits_w)_e over unmasked rows.
double cross_entropy_loss(const Tensor& logits, std::span<const int> targets, std::span<const double> mask);

}  // namespace zst
