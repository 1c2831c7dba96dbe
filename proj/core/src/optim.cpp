// SPDX-License-Identifier: Apache-2.0
#include "zst/optim.hpp"

#include <algorithm>
#include <cmath>

#include "zst/error.hpp"

namespace zst {

AdamState AdamState::zeros_like(std::span<Tensor* const> params, AdamOptions options) {
  AdamState s;
  s.options = options;
  for (const Tensor* p : params) {
    s.m.emplace_back(p->shape());
    s.v.emplace_back(p->shape());
    if (options.amsgrad) s.v_max.emplace_back(p->shape());
  }
  return s;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state) {
  const AdamOptions& o = state.options;
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size() ||
      (o.amsgrad && state.v_max.size() != params.size())) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                         std::to_string(grads.size()) + " gradients, " + std::to_string(state.m.size()) +
                         " moment slots");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].shape() != params[k]->shape() || state.m[k].shape() != params[k]->shape() ||
        state.v[k].shape() != params[k]->shape()) {
      throw DimensionError("adam_step: parameter " + std::to_string(k) + " has shape " +
                           shape_string(params[k]->shape()) + " but gradient " + shape_string(grads[k].shape()) +
                           " and moments " + shape_string(state.m[k].shape()));
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double alpha = o.learning_rate * std::sqrt(1.0 - std::pow(o.beta2, t)) / (1.0 - std::pow(o.beta1, t));

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->data();
    auto g = grads[k].data();
    auto m = state.m[k].data();
    auto v = state.v[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      double denom_v = v[i];
      if (o.amsgrad) {
        auto& vm = state.v_max[k][i];
        vm = std::max(vm, v[i]);
        denom_v = vm;
      }
      p[i] -= alpha * m[i] / (std::sqrt(denom_v) + o.epsilon);
    }
  }
}

double global_norm(std::span<const Tensor> grads) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data()) sq += v * v;
  return std::sqrt(sq);
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractError("clip norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : g.data()) v *= factor;
  }
  return norm;
}

}  // namespace zst
