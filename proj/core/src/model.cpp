// SPDX-License-Identifier: Apache-2.0
#include "zst/model.hpp"

#include <cmath>
#include <string>
#include <random>

#include "zst/error.hpp"

namespace zst {

void ModelConfig::validate() const {
  if (vocab_size < 5) throw ConfigError("model vocabulary must hold the specials plus at least one token");
  if (embed_dim == 0 || hidden == 0 || layers == 0) {
    throw ConfigError("embed-dim, hidden and layers must be positive");
  }
}

namespace {

LstmCellParams make_cell(std::size_t input_dim, std::size_t hidden) {
  LstmCellParams p;
  p.W = Tensor({input_dim, 4 * hidden});
  p.U = Tensor({hidden, 4 * hidden});
  p.b = Tensor({4 * hidden});
  return p;
}

void fill_uniform(Tensor& t, std::mt19937_64& rng, double bound) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : t.data()) v = u(rng);
}

}  // namespace

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t h = config.hidden;
  const std::size_t ann = config.annotation_dim();
  const std::size_t a = config.attention_size();
  const std::size_t V = config.vocab_size;

  ModelParams p;
  p.config = config;
  p.embedding = Tensor({V, config.embed_dim});
  for (std::size_t l = 0; l < config.layers; ++l) {
    EncoderLayer layer;
    const std::size_t in = l == 0 ? config.embed_dim : ann;
    for (std::size_t d = 0; d < config.directions(); ++d) layer.directions.push_back(make_cell(in, h));
    p.encoder.push_back(std::move(layer));
  }
  p.bridge_W = Tensor({ann, h});
  p.bridge_b = Tensor({h});
  p.decoder = make_cell(config.embed_dim, h);
  p.attention_W1 = Tensor({ann, a});
  p.attention_W2 = Tensor({h, a});
  p.attention_v = Tensor({a, 1});
  p.output_W = Tensor({h + ann, V});
  p.output_b = Tensor({V});

  std::mt19937_64 rng(seed);
  for (auto& [name, t] : p.named()) {
    const bool is_bias = name.ends_with(".b") || name.ends_with(".bias");
    if (name == "embedding") {
      fill_uniform(*t, rng, kEmbeddingInitBound);
      for (double& v : t->row(Vocabulary::kPad)) v = 0.0;
    } else if (is_bias) {
      t->fill(0.0);
      if (name.find("encoder") == 0 || name.find("decoder") == 0) {
        for (std::size_t j = h; j < 2 * h; ++j) (*t)[j] = 1.0;
      }
    } else {
      fill_uniform(*t, rng, kWeightInitBound);
    }
  }
  return p;
}

std::vector<NamedTensor> ModelParams::named() {
  std::vector<NamedTensor> out;
  out.push_back({"embedding", &embedding});
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    for (std::size_t d = 0; d < encoder[l].directions.size(); ++d) {
      const std::string prefix = "encoder.l" + std::to_string(l) + (d == 0 ? ".fwd" : ".bwd");
      auto& cell = encoder[l].directions[d];
      out.push_back({prefix + ".W", &cell.W});
      out.push_back({prefix + ".U", &cell.U});
      out.push_back({prefix + ".b", &cell.b});
    }
  }
  out.push_back({"bridge.W", &bridge_W});
  out.push_back({"bridge.bias", &bridge_b});
  out.push_back({"decoder.W", &decoder.W});
  out.push_back({"decoder.U", &decoder.U});
  out.push_back({"decoder.b", &decoder.b});
  out.push_back({"attention.W1", &attention_W1});
  out.push_back({"attention.W2", &attention_W2});
  out.push_back({"attention.v", &attention_v});
  out.push_back({"output.W", &output_W});
  out.push_back({"output.bias", &output_b});
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->named()) out.emplace_back(name, t);
  return out;
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& n : named()) out.push_back(n.tensor);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->size();
  return n;
}

// ---- graph construction ----

ParamVars bind(Tape& tape, const ModelParams& params) {
  ParamVars v;
  v.config = &params.config;
  v.embedding = tape.parameter(params.embedding);
  for (const auto& layer : params.encoder) {
    std::vector<LstmVars> dirs;
    for (const auto& cell : layer.directions) {
      dirs.push_back({tape.parameter(cell.W), tape.parameter(cell.U), tape.parameter(cell.b)});
    }
    v.encoder.push_back(std::move(dirs));
  }
  v.bridge_W = tape.parameter(params.bridge_W);
  v.bridge_b = tape.parameter(params.bridge_b);
  v.decoder = {tape.parameter(params.decoder.W), tape.parameter(params.decoder.U), tape.parameter(params.decoder.b)};
  v.attention_W1 = tape.parameter(params.attention_W1);
  v.attention_W2 = tape.parameter(params.attention_W2);
  v.attention_v = tape.parameter(params.attention_v);
  v.output_W = tape.parameter(params.output_W);
  v.output_b = tape.parameter(params.output_b);
  return v;
}

ParamVars unflatten(const ModelConfig& config, std::span<const Var> vars) {
  const std::size_t expected = 1 + 3 * config.layers * config.directions() + 10;
  if (vars.size() != expected) {
    throw DimensionError("unflatten: expected " + std::to_string(expected) + " handles, got " + std::to_string(vars.size()));
  }
  ParamVars v;
  v.config = &config;
  std::size_t k = 0;
  v.embedding = vars[k++];
  for (std::size_t l = 0; l < config.layers; ++l) {
    std::vector<LstmVars> dirs;
    for (std::size_t d = 0; d < config.directions(); ++d, k += 3) dirs.push_back({vars[k], vars[k + 1], vars[k + 2]});
    v.encoder.push_back(std::move(dirs));
  }
  v.bridge_W = vars[k++];
  v.bridge_b = vars[k++];
  v.decoder = {vars[k], vars[k + 1], vars[k + 2]};
  k += 3;
  v.attention_W1 = vars[k++];
  v.attention_W2 = vars[k++];
  v.attention_v = vars[k++];
  v.output_W = vars[k++];
  v.output_b = vars[k++];
  return v;
}

std::vector<Var> ParamVars::all() const {
  std::vector<Var> out{embedding};
  for (const auto& layer : encoder)
    for (const auto& cell : layer) out.insert(out.end(), {cell.W, cell.U, cell.b});
  out.insert(out.end(), {bridge_W, bridge_b, decoder.W, decoder.U, decoder.b, attention_W1, attention_W2, attention_v,
                         output_W, output_b});
  return out;
}

LstmState lstm_step(Var x, const LstmState& previous, const LstmVars& p, std::size_t hidden) {
  Var gates = add_bias(add(matmul(x, p.W), matmul(previous.h, p.U)), p.b);
  Var i = sigmoid(slice_cols(gates, 0, hidden));
  Var f = sigmoid(slice_cols(gates, hidden, hidden));
  Var g = tanh(slice_cols(gates, 2 * hidden, hidden));
  Var o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  Var c = add(mul(f, previous.c), mul(i, g));
  Var h = mul(o, tanh(c));
  if (!h.value().all_finite() || !c.value().all_finite()) throw NumericError("LSTM cell produced a non-finite value");
  return {h, c};
}

namespace {

LstmState zero_state(Tape& tape, std::size_t batch, std::size_t hidden) {
  Var z = tape.constant(Tensor({batch, hidden}));
  return {z, z};
}

}  // namespace

EncodedSource encode(const ParamVars& p, std::span<const int> source_ids, std::span<const std::size_t> lengths,
                     std::size_t length) {
  const ModelConfig& cfg = *p.config;
  const std::size_t B = lengths.size();
  if (B == 0 || length == 0) throw ContractError("encode: empty source");
  if (source_ids.size() != B * length) throw DimensionError("encode: source id matrix does not match [B x S]");
  Tape& tape = *p.embedding.tape();
  const std::size_t h = cfg.hidden;

  EncodedSource out;
  out.batch = B;
  out.length = length;
  out.mask = Tensor({B, length});
  std::vector<std::vector<double>> keep(length, std::vector<double>(B, 0.0));
  for (std::size_t b = 0; b < B; ++b) {
    if (lengths[b] == 0 || lengths[b] > length) throw ContractError("encode: source length out of range");
    for (std::size_t t = 0; t < lengths[b]; ++t) {
      out.mask(b, t) = 1.0;
      keep[t][b] = 1.0;
    }
  }

  std::vector<Var> inputs(length);
  std::vector<int> column(B);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      const int id = source_ids[b * length + t];
      if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
        throw ContractError("encode: token id " + std::to_string(id) + " outside vocabulary");
      }
      column[b] = id;
    }
    inputs[t] = gather_rows(p.embedding, column);
  }

  LstmState last_fwd, first_bwd;
  for (std::size_t l = 0; l < p.encoder.size(); ++l) {
    const auto& dirs = p.encoder[l];
    std::vector<Var> fwd(length), bwd;
    LstmState s = zero_state(tape, B, h);
    for (std::size_t t = 0; t < length; ++t) {
      LstmState next = lstm_step(inputs[t], s, dirs[0], h);
      s = {blend_rows(next.h, s.h, keep[t]), blend_rows(next.c, s.c, keep[t])};
      fwd[t] = s.h;
    }
    last_fwd = s;
    if (dirs.size() > 1) {
      bwd.resize(length);
      s = zero_state(tape, B, h);
      for (std::size_t t = length; t-- > 0;) {
        LstmState next = lstm_step(inputs[t], s, dirs[1], h);
        s = {blend_rows(next.h, s.h, keep[t]), blend_rows(next.c, s.c, keep[t])};
        bwd[t] = s.h;
      }
      first_bwd = s;
      for (std::size_t t = 0; t < length; ++t) {
        const Var parts[] = {fwd[t], bwd[t]};
        inputs[t] = concat_cols(parts);
      }
    } else {
      inputs = fwd;
    }
  }
  out.annotations = inputs;
  for (const Var& a : out.annotations) out.keys.push_back(matmul(a, p.attention_W1));

  Var summary = last_fwd.h;
  if (cfg.bidirectional) {
    const Var parts[] = {last_fwd.h, first_bwd.h};
    summary = concat_cols(parts);
  }
  Var h0 = tanh(add_bias(matmul(summary, p.bridge_W), p.bridge_b));
  out.initial_decoder_state = {h0, tape.constant(Tensor({B, h}))};
  return out;
}

AttentionResult attend(const ParamVars& p, Var decoder_h, const EncodedSource& source) {
  if (source.length == 0) throw ContractError("attend: empty source");
  Var query = matmul(decoder_h, p.attention_W2);
  std::vector<Var> scores;
  scores.reserve(source.length);
  for (const Var& key : source.keys) scores.push_back(matmul(tanh(add(key, query)), p.attention_v));
  Var weights = masked_softmax_rows(concat_cols(scores), source.mask);
  Var context = mul_col(source.annotations[0], slice_cols(weights, 0, 1));
  for (std::size_t s = 1; s < source.length; ++s) {
    context = add(context, mul_col(source.annotations[s], slice_cols(weights, s, 1)));
  }
  return {weights, context};
}

DecoderStep decoder_step(const ParamVars& p, std::span<const int> previous_ids, const LstmState& state,
                         const EncodedSource& source) {
  for (int id : previous_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= p.config->vocab_size) {
      throw ContractError("decoder_step: token id " + std::to_string(id) + " outside vocabulary");
    }
  }
  Var x = gather_rows(p.embedding, previous_ids);
  DecoderStep out;
  out.state = lstm_step(x, state, p.decoder, p.config->hidden);
  out.attention = attend(p, out.state.h, source);
  const Var parts[] = {out.state.h, out.attention.context};
  out.features = concat_cols(parts);
  return out;
}

Var project_output(const ParamVars& p, Var features) {
  return add_bias(matmul(features, p.output_W), p.output_b);
}

Var sequence_loss(const ParamVars& p, const Batch& batch, const DecoderInputObserver& observer) {
  const std::size_t B = batch.size;
  const std::size_t T = batch.target_len;
  const double tokens = static_cast<double>(batch.token_count());
  if (tokens == 0.0) throw ContractError("sequence_loss: every target position is masked");

  EncodedSource source = encode(p, batch.source_ids, batch.source_lengths, batch.source_len);
  LstmState state = source.initial_decoder_state;
  std::vector<Var> features;
  std::vector<int> targets;
  std::vector<double> weights;
  std::vector<int> inputs(B);
  for (std::size_t t = 0; t < T; ++t) {
    // teacher forcing: the gold previous token, never the model's guess
    for (std::size_t b = 0; b < B; ++b) inputs[b] = batch.target_in_at(b, t);
    if (observer) observer(t, inputs);
    DecoderStep step = decoder_step(p, inputs, state, source);
    state = step.state;
    features.push_back(step.features);
    for (std::size_t b = 0; b < B; ++b) {
      targets.push_back(batch.target_out_at(b, t));
      weights.push_back(batch.mask[b * T + t]);
    }
  }
  Var logits = project_output(p, concat_rows(features));
  return softmax_cross_entropy(logits, targets, weights, tokens);
}

// ---- single-sentence evaluation ----

std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                                    const LstmCellParams& p) {
  const std::size_t h = p.U.rows();
  if (x.size() != p.W.rows() || h_prev.size() != h || c_prev.size() != h || p.b.size() != 4 * h) {
    throw DimensionError("lstm_cell: x " + shape_string(x.shape()) + ", state " + shape_string(h_prev.shape()) +
                         " for W " + shape_string(p.W.shape()) + ", U " + shape_string(p.U.shape()));
  }
  Tape tape(false);
  auto row = [&](const Tensor& t) { return tape.constant(Tensor({1, t.size()}, t.storage())); };
  LstmVars vars{tape.parameter(p.W), tape.parameter(p.U), tape.parameter(p.b)};
  LstmState s = lstm_step(row(x), {row(h_prev), row(c_prev)}, vars, h);
  return {Tensor({h}, s.h.value().storage()), Tensor({h}, s.c.value().storage())};
}

EncoderOutput encode(std::span<const int> source_ids, const ModelParams& params) {
  if (source_ids.empty()) throw ContractError("encode: empty source");
  Tape tape(false);
  ParamVars p = bind(tape, params);
  const std::size_t lengths[] = {source_ids.size()};
  EncodedSource src = encode(p, source_ids, lengths, source_ids.size());
  const std::size_t ann = params.config.annotation_dim();
  EncoderOutput out;
  out.annotations = Tensor({src.length, ann});
  for (std::size_t s = 0; s < src.length; ++s) {
    auto v = src.annotations[s].value().data();
    std::copy(v.begin(), v.end(), out.annotations.row(s).begin());
  }
  out.final_h = Tensor({params.config.hidden}, src.initial_decoder_state.h.value().storage());
  out.final_c = Tensor({params.config.hidden}, src.initial_decoder_state.c.value().storage());
  return out;
}

namespace {

EncodedSource wrap_annotations(Tape& tape, const ParamVars& p, const Tensor& annotations) {
  const std::size_t S = annotations.rows();
  const std::size_t ann = p.config->annotation_dim();
  if (S == 0 || annotations.cols() != ann) {
    throw DimensionError("annotations " + shape_string(annotations.shape()) + " do not match annotation width " +
                         std::to_string(ann));
  }
  EncodedSource src;
  src.batch = 1;
  src.length = S;
  src.mask = Tensor({1, S}, 1.0);
  for (std::size_t s = 0; s < S; ++s) {
    auto r = annotations.row(s);
    Var a = tape.constant(Tensor({1, ann}, std::vector<double>(r.begin(), r.end())));
    src.annotations.push_back(a);
    src.keys.push_back(matmul(a, p.attention_W1));
  }
  return src;
}

}  // namespace

AttentionOutput attention(const Tensor& decoder_h, const Tensor& annotations, const ModelParams& params) {
  if (decoder_h.size() != params.config.hidden) throw DimensionError("attention: decoder state has wrong width");
  Tape tape(false);
  ParamVars p = bind(tape, params);
  EncodedSource src = wrap_annotations(tape, p, annotations);
  AttentionResult r = attend(p, tape.constant(Tensor({1, decoder_h.size()}, decoder_h.storage())), src);
  return {Tensor({src.length}, r.weights.value().storage()),
          Tensor({params.config.annotation_dim()}, r.context.value().storage())};
}

DecodeStepOutput decode_step(int previous_id, const Tensor& h, const Tensor& c, const Tensor& annotations,
                             const ModelParams& params) {
  const std::size_t hd = params.config.hidden;
  if (h.size() != hd || c.size() != hd) throw DimensionError("decode_step: state has wrong width");
  Tape tape(false);
  ParamVars p = bind(tape, params);
  EncodedSource src = wrap_annotations(tape, p, annotations);
  LstmState state{tape.constant(Tensor({1, hd}, h.storage())), tape.constant(Tensor({1, hd}, c.storage()))};
  const int prev[] = {previous_id};
  DecoderStep step = decoder_step(p, prev, state, src);
  Var logits = project_output(p, step.features);
  return {Tensor({params.config.vocab_size}, logits.value().storage()),
          Tensor({hd}, step.state.h.value().storage()), Tensor({hd}, step.state.c.value().storage()),
          Tensor({src.length}, step.attention.weights.value().storage())};
}

double cross_entropy_loss(const Tensor& logits, std::span<const int> targets, std::span<const double> mask) {
  if (targets.size() != logits.rows() || mask.size() != logits.rows()) {
    throw DimensionError("cross_entropy_loss: " + std::to_string(logits.rows()) + " positions, " +
                         std::to_string(targets.size()) + " targets, " + std::to_string(mask.size()) + " mask entries");
  }
  double count = 0.0;
  for (double m : mask) count += m;
  if (count == 0.0) throw ContractError("cross_entropy_loss: every position is masked");
  Tape tape(false);
  Var l = tape.constant(Tensor({logits.rows(), logits.cols()}, logits.storage()));
  return softmax_cross_entropy(l, targets, mask, count).value()[0];
}

}  // namespace zst
