// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "zst/autodiff.hpp"

namespace zst {

/// Builds a scalar loss on `tape` from tape-bound parameter handles
/// (index-aligned with the checked tensors). Must be deterministic.
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::vector<double> per_parameter;  // max relative error within each tensor
  std::size_t worst_parameter = 0;
  std::size_t worst_entry = 0;
};

/// Compares reverse-mode gradients with central differences of step `h`.
/// Relative error per entry is |a - c| / max(|a|, |c|, 1e-8).
GradCheckReport fd_check(const LossBuilder& loss, std::span<Tensor* const> params, double h);

}  // namespace zst
