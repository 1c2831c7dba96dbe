// SPDX-License-Identifier: Apache-2.0
#include "zst/autodiff.hpp"

#include <cmath>

#include "zst/error.hpp"

namespace zst {

const Tensor& Var::value() const {
  if (!tape_) throw StateError("use of an unbound Var");
  return tape_->value(*this);
}

void Tape::check_open() const {
  if (frozen_) throw StateError("tape is frozen after backward(); record a new tape");
}

void Tape::check_owned(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw StateError("Var does not belong to this tape");
}

Var Tape::constant(Tensor value) {
  check_open();
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const Tensor& storage) {
  check_open();
  Node n;
  n.borrowed = &storage;
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value_at(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.borrowed ? *n.borrowed : n.value;
}

const Tensor& Tape::value(Var v) const {
  check_owned(v);
  return value_at(v.id_);
}

Tensor Tape::grad(Var v) const {
  check_owned(v);
  const Node& n = nodes_[v.id_];
  if (n.grad.empty()) return Tensor(value_at(v.id_).shape());
  return n.grad;
}

bool Tape::has_grad(Var v) const {
  check_owned(v);
  return !nodes_[v.id_].grad.empty();
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(value_at(id).shape());
  return n.grad;
}

Var Tape::push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::push(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  check_open();
  bool needs = false;
  for (const Var& in : inputs) {
    check_owned(in);
    needs = needs || nodes_[in.id_].requires_grad;
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_ && needs;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  check_owned(loss);
  if (frozen_) throw StateError("backward() called twice on the same tape");
  if (!record_) throw StateError("backward() on a tape that does not record gradients");
  if (value_at(loss.id_).size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + shape_string(value_at(loss.id_).shape()));
  }
  frozen_ = true;
  if (!nodes_[loss.id_].requires_grad) return;
  grad_buffer(loss.id_).fill(1.0);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.empty()) n.backward(*this, i);
  }
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

std::size_t rows_of(const Tensor& t) { return t.rows(); }
std::size_t cols_of(const Tensor& t) { return t.cols(); }

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = *a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(cols_of(av) == rows_of(bv), "matmul: cannot multiply " + shape_string(av.shape()) + " by " +
                                          shape_string(bv.shape()));
  const std::size_t m = rows_of(av), k = cols_of(av), n = cols_of(bv);
  Tensor out({m, n});
  gemm_acc(av.data(), bv.data(), out.data(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.push(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_at(self);
    if (t.requires_grad(ia)) gemm_nt_acc(g.data(), t.value_at(ib).data(), t.grad_buffer(ia).data(), m, k, n);
    if (t.requires_grad(ib)) gemm_tn_acc(t.value_at(ia).data(), g.data(), t.grad_buffer(ib).data(), m, k, n);
  });
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.size() == bv.size() && av.rows() == bv.rows(),
          "add: shapes " + shape_string(av.shape()) + " and " + shape_string(bv.shape()));
  Tensor out = av;
  auto od = out.data();
  auto bd = bv.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    for (std::size_t id : {ia, ib}) {
      if (!t.requires_grad(id)) continue;
      auto d = t.grad_buffer(id).data();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  const std::size_t m = av.rows(), n = av.cols();
  require(bv.size() == n, "add_bias: bias " + shape_string(bv.shape()) + " for " + shape_string(av.shape()));
  Tensor out = av;
  for (std::size_t i = 0; i < m; ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < n; ++j) r[j] += bv[j];
  }
  const std::size_t ia = a.id(), ib = bias.id();
  return a.tape()->push(std::move(out), {a, bias}, [ia, ib, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_at(self);
    if (t.requires_grad(ia)) {
      auto d = t.grad_buffer(ia).data();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto d = t.grad_buffer(ib).data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d[j] += g[i * n + j];
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.size() == bv.size() && av.rows() == bv.rows(),
          "mul: shapes " + shape_string(av.shape()) + " and " + shape_string(bv.shape()));
  Tensor out = av;
  auto od = out.data();
  auto bd = bv.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    if (t.requires_grad(ia)) {
      auto d = t.grad_buffer(ia).data();
      auto o = t.value_at(ib).data();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * o[i];
    }
    if (t.requires_grad(ib)) {
      auto d = t.grad_buffer(ib).data();
      auto o = t.value_at(ia).data();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * o[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia, factor](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    auto d = t.grad_buffer(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += factor * g[i];
  });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = std::tanh(v);
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    auto y = t.value_at(self).data();
    auto d = t.grad_buffer(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    auto y = t.value_at(self).data();
    auto d = t.grad_buffer(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t m = parts[0].value().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    require(v.rows() == m, "concat_cols: row count " + std::to_string(v.rows()) + " != " + std::to_string(m));
    widths.push_back(v.cols());
    total += v.cols();
  }
  Tensor out({m, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < m; ++i) {
      auto src = v.row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += widths[k];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return parts[0].tape()->push(std::move(out), parts, [ids, widths, m, total](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_at(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) {
        auto d = t.grad_buffer(ids[k]).data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) d[i * widths[k] + j] += g[i * total + offset + j];
      }
      offset += widths[k];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t n = parts[0].value().cols();
  std::vector<double> data;
  std::vector<std::size_t> sizes;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    require(v.cols() == n, "concat_rows: column count " + std::to_string(v.cols()) + " != " + std::to_string(n));
    data.insert(data.end(), v.data().begin(), v.data().end());
    sizes.push_back(v.size());
    rows += v.rows();
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return parts[0].tape()->push(Tensor({rows, n}, std::move(data)), parts, [ids, sizes](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) {
        auto d = t.grad_buffer(ids[k]).data();
        for (std::size_t i = 0; i < sizes[k]; ++i) d[i] += g[offset + i];
      }
      offset += sizes[k];
    }
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const Tensor& av = a.value();
  const std::size_t m = av.rows(), n = av.cols();
  require(count > 0 && start + count <= n, "slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) +
                                               ") out of " + shape_string(av.shape()));
  Tensor out({m, count});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = av[i * n + start + j];
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia, m, n, start, count](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    auto d = t.grad_buffer(ia).data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) d[i * n + start + j] += g[i * count + j];
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  const Tensor& tv = table.value();
  const std::size_t n = tv.cols();
  require(!ids.empty(), "gather_rows: no ids");
  Tensor out({ids.size(), n});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= tv.rows()) {
      throw ContractError("gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                          std::to_string(tv.rows()) + " rows");
    }
    auto src = tv.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const std::size_t it = table.id();
  std::vector<int> idx(ids.begin(), ids.end());
  return table.tape()->push(std::move(out), {table}, [it, idx = std::move(idx), n](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    auto d = t.grad_buffer(it).data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::size_t r = static_cast<std::size_t>(idx[i]);
      for (std::size_t j = 0; j < n; ++j) d[r * n + j] += g[i * n + j];
    }
  });
}

Var blend_rows(Var fresh, Var previous, std::span<const double> keep) {
  const Tensor& fv = fresh.value();
  const Tensor& pv = previous.value();
  require(fv.shape() == pv.shape(), "blend_rows: shapes " + shape_string(fv.shape()) + " and " +
                                        shape_string(pv.shape()));
  require(keep.size() == fv.rows(), "blend_rows: keep mask length mismatch");
  const std::size_t n = fv.cols();
  Tensor out = fv;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] == 0.0) {
      auto src = pv.row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
  }
  const std::size_t ifr = fresh.id(), ipr = previous.id();
  std::vector<double> k(keep.begin(), keep.end());
  return fresh.tape()->push(std::move(out), {fresh, previous}, [ifr, ipr, k = std::move(k), n](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    for (std::size_t i = 0; i < k.size(); ++i) {
      const std::size_t target = k[i] != 0.0 ? ifr : ipr;
      if (!t.requires_grad(target)) continue;
      auto d = t.grad_buffer(target).data();
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] += g[i * n + j];
    }
  });
}

Var mul_col(Var a, Var w) {
  const Tensor& av = a.value();
  const Tensor& wv = w.value();
  const std::size_t m = av.rows(), n = av.cols();
  require(wv.size() == m, "mul_col: weights " + shape_string(wv.shape()) + " for " + shape_string(av.shape()));
  Tensor out = av;
  for (std::size_t i = 0; i < m; ++i)
    for (double& v : out.row(i)) v *= wv[i];
  const std::size_t ia = a.id(), iw = w.id();
  return a.tape()->push(std::move(out), {a, w}, [ia, iw, m, n](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    if (t.requires_grad(ia)) {
      auto d = t.grad_buffer(ia).data();
      auto wv = t.value_at(iw).data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i * n + j] += g[i * n + j] * wv[i];
    }
    if (t.requires_grad(iw)) {
      auto d = t.grad_buffer(iw).data();
      auto av = t.value_at(ia).data();
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * av[i * n + j];
        d[i] += s;
      }
    }
  });
}

Var masked_softmax_rows(Var scores, const Tensor& mask) {
  const Tensor& sv = scores.value();
  require(mask.size() == sv.size(), "masked_softmax_rows: mask " + shape_string(mask.shape()) + " for " +
                                        shape_string(sv.shape()));
  const std::size_t m = sv.rows(), n = sv.cols();
  Tensor out({m, n});
  std::vector<double> buf;
  for (std::size_t i = 0; i < m; ++i) {
    buf.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (mask[i * n + j] != 0.0) buf.push_back(sv[i * n + j]);
    if (buf.empty()) throw ContractError("masked_softmax_rows: row " + std::to_string(i) + " fully masked");
    softmax_inplace(buf);
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask[i * n + j] != 0.0) out(i, j) = buf[k++];
  }
  const std::size_t is = scores.id();
  return scores.tape()->push(std::move(out), {scores}, [is, m, n](Tape& t, std::size_t self) {
    auto g = t.grad_at(self).data();
    auto y = t.value_at(self).data();
    auto d = t.grad_buffer(is).data();
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] += y[i * n + j] * (g[i * n + j] - s);
    }
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> targets, std::span<const double> weights,
                          double normalizer) {
  const Tensor& lv = logits.value();
  const std::size_t m = lv.rows(), n = lv.cols();
  require(targets.size() == m && weights.size() == m, "softmax_cross_entropy: " + std::to_string(m) +
                                                          " rows, " + std::to_string(targets.size()) +
                                                          " targets, " + std::to_string(weights.size()) + " weights");
  if (!(normalizer > 0.0)) throw ContractError("softmax_cross_entropy: normalizer must be positive");
  Tensor probs = lv;
  long double loss = 0.0L;
  for (std::size_t i = 0; i < m; ++i) {
    auto r = probs.row(i);
    softmax_inplace(r);
    if (weights[i] == 0.0) continue;
    const int tgt = targets[i];
    if (tgt < 0 || static_cast<std::size_t>(tgt) >= n) {
      throw ContractError("softmax_cross_entropy: target " + std::to_string(tgt) + " outside " + std::to_string(n) +
                          " classes");
    }
    // log-sum-exp form keeps tiny probabilities exact
    const auto lr = lv.row(i);
    double mx = lr[0];
    for (double v : lr) mx = std::max(mx, v);
    long double se = 0.0L;
    for (double v : lr) se += std::exp(static_cast<long double>(v) - mx);
    loss += weights[i] * (mx + std::log(se) - static_cast<long double>(lr[static_cast<std::size_t>(tgt)]));
  }
  std::vector<int> tg(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  const std::size_t il = logits.id();
  return logits.tape()->push(
      Tensor({1}, std::vector<double>{static_cast<double>(loss / normalizer)}), {logits},
      [il, probs = std::move(probs), tg = std::move(tg), w = std::move(w), normalizer, m, n](Tape& t, std::size_t self) {
        const double g = t.grad_at(self)[0] / normalizer;
        auto d = t.grad_buffer(il).data();
        for (std::size_t i = 0; i < m; ++i) {
          if (w[i] == 0.0) continue;
          const double s = g * w[i];
          for (std::size_t j = 0; j < n; ++j) d[i * n + j] += s * probs[i * n + j];
          d[i * n + static_cast<std::size_t>(tg[i])] -= s;
        }
      });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return a.tape()->push(Tensor({1}, std::vector<double>{s}), {a}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad_at(self)[0];
    for (double& d : t.grad_buffer(ia).data()) d += g;
  });
}

}  // namespace zst
