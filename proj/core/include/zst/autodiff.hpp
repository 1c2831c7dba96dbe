// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "zst/tensor.hpp"

namespace zst {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  const Tensor& value() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = std::numeric_limits<std::size_t>::max();
};

/// Reverse-mode recording of whole-tensor operations.
///
/// Nodes are appended in evaluation order, so every node's inputs precede it
/// and a single reverse sweep is a valid topological traversal. After
/// backward() the tape is frozen: no new nodes, no second sweep.
///
/// A tape constructed with `record_gradients = false` keeps forward values
/// only; it is what inference uses.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Untracked input (no gradient flows into it).
  Var constant(Tensor value);
  /// Tracked leaf that borrows `storage`; the tensor must outlive the tape.
  Var parameter(const Tensor& storage);

  const Tensor& value(Var v) const;
  /// Gradient accumulated into `v` by backward(); zeros if nothing reached it.
  Tensor grad(Var v) const;
  bool has_grad(Var v) const;

  void backward(Var loss);

  bool frozen() const noexcept { return frozen_; }
  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Used by op implementations.
  Var push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var push(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const Tensor& value_at(std::size_t id) const;
  const Tensor& grad_at(std::size_t id) const { return nodes_[id].grad; }
  /// Lazily zero-initialised gradient buffer of node `id`.
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    const Tensor* borrowed = nullptr;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  void check_open() const;
  void check_owned(Var v) const;

  std::vector<Node> nodes_;
  bool record_ = true;
  bool frozen_ = false;
};

// ---- differentiable operations ----
// All matrices are rank-2 [rows x cols]; row vectors may be rank-1.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
/// a [m x n] + bias [n] broadcast over rows.
Var add_bias(Var a, Var bias);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var tanh(Var a);
Var sigmoid(Var a);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t start, std::size_t count);
/// Rows `ids` of `table`; backward scatter-adds into the table.
Var gather_rows(Var table, std::span<const int> ids);
/// Row-wise select: out_i = keep_i ? fresh_i : previous_i, keep_i in {0,1}.
Var blend_rows(Var fresh, Var previous, std::span<const double> keep);
/// a [m x n] scaled per row by w [m x 1].
Var mul_col(Var a, Var w);
/// Row-wise softmax restricted to entries where mask == 1; other entries are exactly 0.
Var masked_softmax_rows(Var scores, const Tensor& mask);
/// Sum over rows of weight_i * -log softmax(logits_i)[target_i], divided by `normalizer`.
Var softmax_cross_entropy(Var logits, std::span<const int> targets, std::span<const double> weights,
                          double normalizer);
Var sum(Var a);

}  // namespace zst
