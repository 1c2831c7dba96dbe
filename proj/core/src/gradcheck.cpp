// SPDX-License-Identifier: Apache-2.0
#include "zst/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "zst/error.hpp"

namespace zst {
namespace {

double evaluate(const LossBuilder& loss, std::span<Tensor* const> params, bool record, std::vector<Tensor>* grads) {
  Tape tape(record);
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (Tensor* p : params) vars.push_back(tape.parameter(*p));
  Var out = loss(tape, vars);
  const Tensor& value = tape.value(out);
  if (value.size() != 1) throw ContractError("fd_check: loss must be scalar, got " + shape_string(value.shape()));
  const double f = value[0];
  if (!std::isfinite(f)) throw NumericError("fd_check: loss is not finite");
  if (grads) {
    tape.backward(out);
    grads->clear();
    for (const Var& v : vars) grads->push_back(tape.grad(v));
  }
  return f;
}

}  // namespace

GradCheckReport fd_check(const LossBuilder& loss, std::span<Tensor* const> params, double h) {
  if (!(h > 0.0)) throw ContractError("fd_check: step h must be positive");
  std::vector<Tensor> analytic;
  evaluate(loss, params, true, &analytic);

  GradCheckReport report;
  report.per_parameter.assign(params.size(), 0.0);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k]->data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double original = data[i];
      data[i] = original + h;
      const double up = evaluate(loss, params, false, nullptr);
      data[i] = original - h;
      const double down = evaluate(loss, params, false, nullptr);
      data[i] = original;
      const double central = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      const double err = std::abs(a - central) / std::max({std::abs(a), std::abs(central), 1e-8});
      if (err > report.per_parameter[k]) report.per_parameter[k] = err;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = k;
        report.worst_entry = i;
      }
    }
  }
  return report;
}

}  // namespace zst
