// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zst/tensor.hpp"

namespace zst {

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  bool amsgrad = false;
};

/// Moment estimates for one parameter list, index-aligned with it.
struct AdamState {
  AdamOptions options;
  std::uint64_t step_count = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::vector<Tensor> v_max;  // populated only when amsgrad is on

  static AdamState zeros_like(std::span<Tensor* const> params, AdamOptions options);
};

/// One Adam update, in the bias-corrected step-size form
///   alpha_t = lr * sqrt(1 - beta2^t) / (1 - beta1^t)
///   p -= alpha_t * m / (sqrt(v) + epsilon)
/// with v replaced by its running maximum under amsgrad.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);

double global_norm(std::span<const Tensor> grads);

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Tensor> grads, double max_norm);

}  // namespace zst
