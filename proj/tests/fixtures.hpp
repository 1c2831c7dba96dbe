// SPDX-License-Identifier: Apache-2.0
// Fixtures shared by the unit tests and the acceptance binary.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "zst/corpus.hpp"
#include "zst/gradcheck.hpp"
#include "zst/model.hpp"

namespace zst::testing {

/// Two padded sentences over a 20-token vocabulary, S,T <= 5.
inline Batch micro_batch() {
  Batch b;
  b.size = 2;
  b.source_len = 5;
  b.target_len = 5;
  b.source_ids = {4, 7, 9, 12, 15, 5, 8, 11, 0, 0};
  b.source_lengths = {5, 3};
  b.target_in = {1, 6, 10, 13, 16, 1, 17, 18, 0, 0};
  b.target_out = {6, 10, 13, 16, 2, 17, 18, 2, 0, 0};
  b.mask = {1, 1, 1, 1, 1, 1, 1, 1, 0, 0};
  return b;
}

/// h = d = 8, |V| = 20, 2-layer BiLSTM, every parameter uniform(-scale, scale).
/// The wide scale keeps every gradient entry well above the rounding floor
/// of a central difference at step 1e-5.
inline ModelParams probe_model(std::uint64_t seed = 1, double scale = 1.5, std::size_t layers = 2) {
  ModelConfig mc;
  mc.vocab_size = 20;
  mc.embed_dim = 8;
  mc.hidden = 8;
  mc.layers = layers;
  ModelParams p = ModelParams::initialize(mc, seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& [name, t] : p.named()) {
    (void)name;
    for (double& v : t->data()) v = u(rng);
  }
  return p;
}

inline GradCheckReport full_model_gradcheck(ModelParams& p, const Batch& b, double h = 1e-5) {
  const auto tensors = p.tensors();
  return fd_check(
      [&](Tape&, std::span<const Var> v) { return sequence_loss(unflatten(p.config, v), b); }, tensors, h);
}

}  // namespace zst::testing
