// tape.hpp: reverse-mode automatic differentiation over Tensor<S>.
//
// A Tape owns the forward values of one step. Ops append nodes; Backward()
// walks nodes in reverse creation order (reverse topological by construction)
// and accumulates gradients by scatter-add, so a value consumed twice receives
// the sum of both contributions and the accumulation order is fixed.
//
// Copyright 2026 The tdb authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef TDB_TAPE_HPP_
#define TDB_TAPE_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tdb/kernels.hpp"
#include "tdb/rng.hpp"
#include "tdb/tensor.hpp"

namespace tdb {

template <typename S>
class Tape;

template <typename S>
struct Var {
  Tape<S> *tape = nullptr;
  int id = -1;

  const Tensor<S> &Val() const { return tape->val(id); }
  bool valid() const { return tape != nullptr && id >= 0; }
};

template <typename S>
class Tape {
 public:
  struct Node {
    Tensor<S> val;
    Tensor<S> grad;  // empty until touched by backward
    std::function<void(Tape &, int)> back;
    bool needs_grad = false;
  };

  bool training = true;
  Rng *rng = nullptr;  // required only by Dropout in training mode

  int NumNodes() const { return static_cast<int>(nodes_.size()); }

  Var<S> Leaf(Tensor<S> v, bool requires_grad) {
    Node n;
    n.val = std::move(v);
    n.needs_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var<S>{this, NumNodes() - 1};
  }

  Var<S> Constant(Tensor<S> v) { return Leaf(std::move(v), false); }

  Var<S> Push(Tensor<S> v, const std::vector<int> &parents,
              std::function<void(Tape &, int)> back) {
    Node n;
    n.val = std::move(v);
    for (int p : parents) n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
    if (n.needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var<S>{this, NumNodes() - 1};
  }

  Tensor<S> &val(int id) { return nodes_[static_cast<size_t>(id)].val; }
  const Tensor<S> &val(int id) const { return nodes_[static_cast<size_t>(id)].val; }

  // Gradient buffer of a node, allocated (zeros) on first touch.
  Tensor<S> &grad(int id) {
    Node &n = nodes_[static_cast<size_t>(id)];
    if (n.grad.data.empty()) n.grad = Tensor<S>::Zeros(n.val.shape);
    return n.grad;
  }

  bool HasGrad(int id) const {
    return !nodes_[static_cast<size_t>(id)].grad.data.empty();
  }

  void Backward(Var<S> loss) {
    Check(loss.Val().size() == 1, "Backward: loss must be scalar");
    grad(loss.id)[0] = S(1);
    for (int i = loss.id; i >= 0; --i) {
      Node &n = nodes_[static_cast<size_t>(i)];
      if (!n.needs_grad || n.grad.data.empty() || !n.back) continue;
      n.back(*this, i);
    }
  }

  // Frees forward values and gradients of non-leaf nodes; used between
  // training steps when the tape object is reused.
  void Clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Op library. Shapes are validated at op-build time.
// ---------------------------------------------------------------------------
namespace ops {

template <typename S>
void AccumulateGrad(Tape<S> &t, int id, const Tensor<S> &delta) {
  Tensor<S> &g = t.grad(id);
  kernels::Axpy(S(1), delta.ptr(), g.ptr(), g.size());
}

// y = a @ b with a: [m,k], b: [k,n]
template <typename S>
Var<S> MatMul(Var<S> a, Var<S> b) {
  Tape<S> &t = *a.tape;
  const Tensor<S> &av = a.Val(), &bv = b.Val();
  Check(av.ndim() == 2 && bv.ndim() == 2 && av.dim(1) == bv.dim(0),
        "MatMul: bad shapes " + ShapeStr(av.shape) + " x " + ShapeStr(bv.shape));
  int64_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor<S> out({m, n});
  kernels::MatMulNN(av.ptr(), bv.ptr(), out.ptr(), m, n, k);
  int aid = a.id, bid = b.id;
  return t.Push(std::move(out), {aid, bid}, [aid, bid, m, n, k](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    // da = dy @ b^T
    Tensor<S> da({m, k});
    kernels::MatMulNT(dy.ptr(), t.val(bid).ptr(), da.ptr(), m, k, n);
    AccumulateGrad(t, aid, da);
    // db = a^T @ dy
    Tensor<S> db({k, n});
    kernels::MatMulTN(t.val(aid).ptr(), dy.ptr(), db.ptr(), k, n, m);
    AccumulateGrad(t, bid, db);
  });
}

template <typename S>
Var<S> Add(Var<S> a, Var<S> b) {
  Tape<S> &t = *a.tape;
  const Tensor<S> &av = a.Val(), &bv = b.Val();
  Check(av.shape == bv.shape, "Add: shape mismatch");
  Tensor<S> out(av.shape);
#pragma omp simd
  for (int64_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  int aid = a.id, bid = b.id;
  return t.Push(std::move(out), {aid, bid}, [aid, bid](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    AccumulateGrad(t, aid, dy);
    AccumulateGrad(t, bid, dy);
  });
}

template <typename S>
Var<S> Sub(Var<S> a, Var<S> b) {
  Tape<S> &t = *a.tape;
  const Tensor<S> &av = a.Val(), &bv = b.Val();
  Check(av.shape == bv.shape, "Sub: shape mismatch");
  Tensor<S> out(av.shape);
#pragma omp simd
  for (int64_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  int aid = a.id, bid = b.id;
  return t.Push(std::move(out), {aid, bid}, [aid, bid](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    AccumulateGrad(t, aid, dy);
    Tensor<S> &g = t.grad(bid);
    kernels::Axpy(S(-1), dy.ptr(), g.ptr(), g.size());
  });
}

template <typename S>
Var<S> Mul(Var<S> a, Var<S> b) {
  Tape<S> &t = *a.tape;
  const Tensor<S> &av = a.Val(), &bv = b.Val();
  Check(av.shape == bv.shape, "Mul: shape mismatch");
  Tensor<S> out(av.shape);
#pragma omp simd
  for (int64_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  int aid = a.id, bid = b.id;
  return t.Push(std::move(out), {aid, bid}, [aid, bid](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    const Tensor<S> &av = t.val(aid), &bv = t.val(bid);
    Tensor<S> &ga = t.grad(aid);
    Tensor<S> &gb = t.grad(bid);
#pragma omp simd
    for (int64_t i = 0; i < dy.size(); ++i) {
      ga[i] += dy[i] * bv[i];
      gb[i] += dy[i] * av[i];
    }
  });
}

template <typename S>
Var<S> Scale(Var<S> a, S c) {
  Tape<S> &t = *a.tape;
  Tensor<S> out(a.Val().shape);
  const Tensor<S> &av = a.Val();
#pragma omp simd
  for (int64_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  int aid = a.id;
  return t.Push(std::move(out), {aid}, [aid, c](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    Tensor<S> &g = t.grad(aid);
    kernels::Axpy(c, dy.ptr(), g.ptr(), g.size());
  });
}

// x: [rows, n], bias: [n]; bias added to every row.
template <typename S>
Var<S> AddBias(Var<S> x, Var<S> bias) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val(), &bv = bias.Val();
  Check(bv.ndim() == 1 && xv.cols() == bv.dim(0), "AddBias: shape mismatch");
  int64_t rows = xv.rows(), n = xv.cols();
  Tensor<S> out(xv.shape);
  for (int64_t i = 0; i < rows; ++i) {
    const S *xr = xv.ptr() + i * n;
    S *o = out.ptr() + i * n;
#pragma omp simd
    for (int64_t j = 0; j < n; ++j) o[j] = xr[j] + bv[j];
  }
  int xid = x.id, bid = bias.id;
  return t.Push(std::move(out), {xid, bid}, [xid, bid, rows, n](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    AccumulateGrad(t, xid, dy);
    Tensor<S> &gb = t.grad(bid);
    for (int64_t i = 0; i < rows; ++i) {
      const S *d = dy.ptr() + i * n;
#pragma omp simd
      for (int64_t j = 0; j < n; ++j) gb[j] += d[j];
    }
  });
}

template <typename S>
Var<S> Gelu(Var<S> x) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val();
  int64_t bad = xv.FirstNonFinite();
  Check(bad < 0, "Gelu: non-finite input at flat index " + std::to_string(bad));
  Tensor<S> out(xv.shape);
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  for (int64_t i = 0; i < out.size(); ++i) {
    double v = static_cast<double>(xv[i]);
    out[i] = static_cast<S>(0.5 * v * (1.0 + std::erf(v * kInvSqrt2)));
  }
  int xid = x.id;
  return t.Push(std::move(out), {xid}, [xid](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    const Tensor<S> &xv = t.val(xid);
    Tensor<S> &g = t.grad(xid);
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    for (int64_t i = 0; i < dy.size(); ++i) {
      double v = static_cast<double>(xv[i]);
      double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      g[i] += dy[i] * static_cast<S>(cdf + v * pdf);
    }
  });
}

template <typename S>
Var<S> Sigmoid(Var<S> x) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val();
  Tensor<S> out(xv.shape);
  for (int64_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<S>(1.0 / (1.0 + std::exp(-static_cast<double>(xv[i]))));
  int xid = x.id;
  return t.Push(std::move(out), {xid}, [xid](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    const Tensor<S> &y = t.val(self);
    Tensor<S> &g = t.grad(xid);
#pragma omp simd
    for (int64_t i = 0; i < dy.size(); ++i) g[i] += dy[i] * y[i] * (S(1) - y[i]);
  });
}

template <typename S>
Var<S> Tanh(Var<S> x) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val();
  Tensor<S> out(xv.shape);
  for (int64_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<S>(std::tanh(static_cast<double>(xv[i])));
  int xid = x.id;
  return t.Push(std::move(out), {xid}, [xid](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    const Tensor<S> &y = t.val(self);
    Tensor<S> &g = t.grad(xid);
#pragma omp simd
    for (int64_t i = 0; i < dy.size(); ++i) g[i] += dy[i] * (S(1) - y[i] * y[i]);
  });
}

// Identity forward, zero gradient to the argument.
template <typename S>
Var<S> StopGradient(Var<S> x) {
  Tape<S> &t = *x.tape;
  Tensor<S> out = x.Val();
  return t.Push(std::move(out), {}, nullptr);
}

// Forward takes the value of `quantized`; backward routes the full gradient
// to `encoder` and none to the quantized constant.
template <typename S>
Var<S> StraightThrough(Var<S> encoder, const Tensor<S> &quantized) {
  Tape<S> &t = *encoder.tape;
  Check(encoder.Val().shape == quantized.shape, "StraightThrough: shape mismatch");
  Tensor<S> out = quantized;
  int eid = encoder.id;
  return t.Push(std::move(out), {eid}, [eid](Tape<S> &t, int self) {
    AccumulateGrad(t, eid, t.grad(self));
  });
}

// Row gather: out[i,:] = table[idx[i],:]. Backward scatter-adds rows.
template <typename S>
Var<S> Gather(Var<S> table, std::vector<int32_t> idx) {
  Tape<S> &t = *table.tape;
  const Tensor<S> &tv = table.Val();
  Check(tv.ndim() == 2, "Gather: table must be 2-D");
  int64_t v = tv.dim(0), d = tv.dim(1);
  int64_t n = static_cast<int64_t>(idx.size());
  for (int32_t i : idx)
    Check(i >= 0 && i < v, "Gather: index " + std::to_string(i) + " out of range");
  Tensor<S> out({n, d});
  for (int64_t i = 0; i < n; ++i)
    std::copy(tv.ptr() + idx[static_cast<size_t>(i)] * d,
              tv.ptr() + (idx[static_cast<size_t>(i)] + 1) * d, out.ptr() + i * d);
  int tid = table.id;
  auto ix = std::make_shared<std::vector<int32_t>>(std::move(idx));
  return t.Push(std::move(out), {tid}, [tid, ix, d](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    Tensor<S> &g = t.grad(tid);
    int64_t n = dy.rows();
    for (int64_t i = 0; i < n; ++i)
      kernels::serial::Axpy(S(1), dy.ptr() + i * d,
                            g.ptr() + (*ix)[static_cast<size_t>(i)] * d, d);
  });
}

// Row slice [start, start+len) of a 2-D value.
template <typename S>
Var<S> Rows(Var<S> x, int64_t start, int64_t len) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val();
  int64_t n = xv.cols();
  Check(start >= 0 && start + len <= xv.rows(), "Rows: slice out of range");
  Tensor<S> out({len, n});
  std::copy(xv.ptr() + start * n, xv.ptr() + (start + len) * n, out.ptr());
  int xid = x.id;
  return t.Push(std::move(out), {xid}, [xid, start, n](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    Tensor<S> &g = t.grad(xid);
    kernels::Axpy(S(1), dy.ptr(), g.ptr() + start * n, dy.size());
  });
}

// Column slice [start, start+len) of a 2-D value.
template <typename S>
Var<S> Cols(Var<S> x, int64_t start, int64_t len) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val();
  int64_t rows = xv.rows(), n = xv.cols();
  Check(start >= 0 && start + len <= n, "Cols: slice out of range");
  Tensor<S> out({rows, len});
  for (int64_t i = 0; i < rows; ++i)
    std::copy(xv.ptr() + i * n + start, xv.ptr() + i * n + start + len,
              out.ptr() + i * len);
  int xid = x.id;
  return t.Push(std::move(out), {xid}, [xid, start, rows, n, len](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    Tensor<S> &g = t.grad(xid);
    for (int64_t i = 0; i < rows; ++i)
      kernels::serial::Axpy(S(1), dy.ptr() + i * len, g.ptr() + i * n + start, len);
  });
}

// Concatenate 2-D values along columns.
template <typename S>
Var<S> ConcatCols(const std::vector<Var<S>> &xs) {
  Check(!xs.empty(), "ConcatCols: empty input");
  Tape<S> &t = *xs[0].tape;
  int64_t rows = xs[0].Val().rows();
  int64_t total = 0;
  std::vector<int> ids;
  std::vector<int64_t> widths;
  for (const Var<S> &x : xs) {
    Check(x.Val().rows() == rows, "ConcatCols: row mismatch");
    widths.push_back(x.Val().cols());
    total += widths.back();
    ids.push_back(x.id);
  }
  Tensor<S> out({rows, total});
  int64_t off = 0;
  for (size_t p = 0; p < xs.size(); ++p) {
    const Tensor<S> &xv = xs[p].Val();
    for (int64_t i = 0; i < rows; ++i)
      std::copy(xv.ptr() + i * widths[p], xv.ptr() + (i + 1) * widths[p],
                out.ptr() + i * total + off);
    off += widths[p];
  }
  auto wid = std::make_shared<std::vector<int64_t>>(std::move(widths));
  auto pid = std::make_shared<std::vector<int>>(ids);
  return t.Push(std::move(out), ids, [pid, wid, rows, total](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    int64_t off = 0;
    for (size_t p = 0; p < pid->size(); ++p) {
      int64_t w = (*wid)[p];
      Tensor<S> &g = t.grad((*pid)[p]);
      for (int64_t i = 0; i < rows; ++i)
        kernels::serial::Axpy(S(1), dy.ptr() + i * total + off, g.ptr() + i * w, w);
      off += w;
    }
  });
}

// Concatenate 2-D values along rows.
template <typename S>
Var<S> ConcatRows(const std::vector<Var<S>> &xs) {
  Check(!xs.empty(), "ConcatRows: empty input");
  Tape<S> &t = *xs[0].tape;
  int64_t cols = xs[0].Val().cols();
  int64_t total = 0;
  std::vector<int> ids;
  std::vector<int64_t> heights;
  for (const Var<S> &x : xs) {
    Check(x.Val().cols() == cols, "ConcatRows: column mismatch");
    heights.push_back(x.Val().rows());
    total += heights.back();
    ids.push_back(x.id);
  }
  Tensor<S> out({total, cols});
  int64_t off = 0;
  for (size_t p = 0; p < xs.size(); ++p) {
    const Tensor<S> &xv = xs[p].Val();
    std::copy(xv.ptr(), xv.ptr() + xv.size(), out.ptr() + off * cols);
    off += heights[p];
  }
  auto hei = std::make_shared<std::vector<int64_t>>(std::move(heights));
  auto pid = std::make_shared<std::vector<int>>(ids);
  return t.Push(std::move(out), ids, [pid, hei, cols](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    int64_t off = 0;
    for (size_t p = 0; p < pid->size(); ++p) {
      int64_t h = (*hei)[p];
      Tensor<S> &g = t.grad((*pid)[p]);
      kernels::Axpy(S(1), dy.ptr() + off * cols, g.ptr(), h * cols);
      off += h;
    }
  });
}

// out[2i,:] = a[i,:], out[2i+1,:] = b[i,:]
template <typename S>
Var<S> InterleaveRows(Var<S> a, Var<S> b) {
  Tape<S> &t = *a.tape;
  const Tensor<S> &av = a.Val(), &bv = b.Val();
  Check(av.shape == bv.shape && av.ndim() == 2, "InterleaveRows: shape mismatch");
  int64_t n = av.dim(0), d = av.dim(1);
  Tensor<S> out({2 * n, d});
  for (int64_t i = 0; i < n; ++i) {
    std::copy(av.ptr() + i * d, av.ptr() + (i + 1) * d, out.ptr() + 2 * i * d);
    std::copy(bv.ptr() + i * d, bv.ptr() + (i + 1) * d, out.ptr() + (2 * i + 1) * d);
  }
  int aid = a.id, bid = b.id;
  return t.Push(std::move(out), {aid, bid}, [aid, bid, n, d](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    Tensor<S> &ga = t.grad(aid);
    Tensor<S> &gb = t.grad(bid);
    for (int64_t i = 0; i < n; ++i) {
      kernels::serial::Axpy(S(1), dy.ptr() + 2 * i * d, ga.ptr() + i * d, d);
      kernels::serial::Axpy(S(1), dy.ptr() + (2 * i + 1) * d, gb.ptr() + i * d, d);
    }
  });
}

// Keeps rows with even index (0, 2, 4, ...) or odd index (1, 3, 5, ...).
template <typename S>
Var<S> EveryOtherRow(Var<S> x, bool odd) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val();
  int64_t rows = xv.rows(), d = xv.cols();
  int64_t n = (rows + (odd ? 0 : 1)) / 2;
  Tensor<S> out({n, d});
  for (int64_t i = 0; i < n; ++i) {
    int64_t src = 2 * i + (odd ? 1 : 0);
    std::copy(xv.ptr() + src * d, xv.ptr() + (src + 1) * d, out.ptr() + i * d);
  }
  int xid = x.id;
  return t.Push(std::move(out), {xid}, [xid, n, d, odd](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    Tensor<S> &g = t.grad(xid);
    for (int64_t i = 0; i < n; ++i)
      kernels::serial::Axpy(S(1), dy.ptr() + i * d,
                            g.ptr() + (2 * i + (odd ? 1 : 0)) * d, d);
  });
}

template <typename S>
Var<S> LayerNorm(Var<S> x, Var<S> gamma, Var<S> beta, double eps = 1e-5) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val();
  int64_t rows = xv.rows(), d = xv.cols();
  Check(gamma.Val().size() == d && beta.Val().size() == d, "LayerNorm: bad params");
  Tensor<S> out(xv.shape);
  auto stats = std::make_shared<Tensor<S>>(Shape{rows, 2});  // mean, rstd
  const Tensor<S> &gv = gamma.Val(), &bv = beta.Val();
  for (int64_t i = 0; i < rows; ++i) {
    const S *xr = xv.ptr() + i * d;
    double mean = 0;
    for (int64_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0;
    for (int64_t j = 0; j < d; ++j) {
      double c = xr[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    double rstd = 1.0 / std::sqrt(var + eps);
    (*stats)[2 * i] = static_cast<S>(mean);
    (*stats)[2 * i + 1] = static_cast<S>(rstd);
    S *o = out.ptr() + i * d;
    for (int64_t j = 0; j < d; ++j)
      o[j] = static_cast<S>((xr[j] - mean) * rstd) * gv[j] + bv[j];
  }
  int xid = x.id, gid = gamma.id, bid = beta.id;
  return t.Push(std::move(out), {xid, gid, bid},
                [xid, gid, bid, stats, rows, d](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    const Tensor<S> &xv = t.val(xid);
    const Tensor<S> &gv = t.val(gid);
    Tensor<S> &gx = t.grad(xid);
    Tensor<S> &gg = t.grad(gid);
    Tensor<S> &gb = t.grad(bid);
    for (int64_t i = 0; i < rows; ++i) {
      const S *xr = xv.ptr() + i * d;
      const S *dyr = dy.ptr() + i * d;
      S mean = (*stats)[2 * i], rstd = (*stats)[2 * i + 1];
      double sum_dh = 0, sum_dh_xhat = 0;
      for (int64_t j = 0; j < d; ++j) {
        double xhat = (xr[j] - mean) * rstd;
        double dh = dyr[j] * gv[j];
        sum_dh += dh;
        sum_dh_xhat += dh * xhat;
        gg[j] += dyr[j] * static_cast<S>(xhat);
        gb[j] += dyr[j];
      }
      double inv_d = 1.0 / static_cast<double>(d);
      for (int64_t j = 0; j < d; ++j) {
        double xhat = (xr[j] - mean) * rstd;
        double dh = dyr[j] * gv[j];
        gx.ptr()[i * d + j] += static_cast<S>(
            rstd * (dh - inv_d * sum_dh - xhat * inv_d * sum_dh_xhat));
      }
    }
  });
}

// Row-wise softmax over the last dimension.
template <typename S>
Var<S> Softmax(Var<S> x) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val();
  int64_t rows = xv.rows(), d = xv.cols();
  Tensor<S> out(xv.shape);
  for (int64_t i = 0; i < rows; ++i) {
    const S *xr = xv.ptr() + i * d;
    S *o = out.ptr() + i * d;
    double mx = xr[0];
    for (int64_t j = 1; j < d; ++j) mx = std::max<double>(mx, xr[j]);
    double z = 0;
    for (int64_t j = 0; j < d; ++j) {
      double e = std::exp(xr[j] - mx);
      o[j] = static_cast<S>(e);
      z += e;
    }
    double inv = 1.0 / z;
    for (int64_t j = 0; j < d; ++j) o[j] = static_cast<S>(o[j] * inv);
  }
  int xid = x.id;
  return t.Push(std::move(out), {xid}, [xid, rows, d](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    const Tensor<S> &y = t.val(self);
    Tensor<S> &g = t.grad(xid);
    for (int64_t i = 0; i < rows; ++i) {
      const S *yr = y.ptr() + i * d;
      const S *dr = dy.ptr() + i * d;
      double dot = 0;
      for (int64_t j = 0; j < d; ++j) dot += static_cast<double>(yr[j]) * dr[j];
      for (int64_t j = 0; j < d; ++j)
        g.ptr()[i * d + j] += static_cast<S>(yr[j] * (dr[j] - dot));
    }
  });
}

// Row-wise x / max(||x||, eps).
template <typename S>
Var<S> L2NormalizeRows(Var<S> x, double eps = 1e-8) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val();
  int64_t rows = xv.rows(), d = xv.cols();
  Tensor<S> out(xv.shape);
  auto norms = std::make_shared<std::vector<double>>(rows);
  for (int64_t i = 0; i < rows; ++i) {
    const S *xr = xv.ptr() + i * d;
    double ss = 0;
    for (int64_t j = 0; j < d; ++j) ss += static_cast<double>(xr[j]) * xr[j];
    double nrm = std::sqrt(ss) + eps;
    (*norms)[static_cast<size_t>(i)] = nrm;
    for (int64_t j = 0; j < d; ++j)
      out.ptr()[i * d + j] = static_cast<S>(xr[j] / nrm);
  }
  int xid = x.id;
  return t.Push(std::move(out), {xid}, [xid, norms, rows, d](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    const Tensor<S> &xv = t.val(xid);
    Tensor<S> &g = t.grad(xid);
    for (int64_t i = 0; i < rows; ++i) {
      const S *xr = xv.ptr() + i * d;
      const S *dr = dy.ptr() + i * d;
      double nrm = (*norms)[static_cast<size_t>(i)];
      double dot = 0;
      for (int64_t j = 0; j < d; ++j) dot += static_cast<double>(dr[j]) * xr[j];
      double inv = 1.0 / nrm, inv3 = 1.0 / (nrm * nrm * nrm);
      for (int64_t j = 0; j < d; ++j)
        g.ptr()[i * d + j] += static_cast<S>(dr[j] * inv - xr[j] * dot * inv3);
    }
  });
}

// Inverted dropout: scales kept entries by 1/keep at train time so that
// evaluation mode is an exact identity (it returns the input var untouched).
template <typename S>
Var<S> Dropout(Var<S> x, double rate) {
  Tape<S> &t = *x.tape;
  if (!t.training || rate <= 0.0) return x;
  Check(t.rng != nullptr, "Dropout: tape has no rng");
  const Tensor<S> &xv = x.Val();
  double keep = 1.0 - rate;
  S scale = static_cast<S>(1.0 / keep);
  auto mask = std::make_shared<Tensor<S>>(xv.shape);
  Tensor<S> out(xv.shape);
  for (int64_t i = 0; i < out.size(); ++i) {
    S m = (t.rng->UniformDouble() < keep) ? scale : S(0);
    (*mask)[i] = m;
    out[i] = xv[i] * m;
  }
  int xid = x.id;
  return t.Push(std::move(out), {xid}, [xid, mask](Tape<S> &t, int self) {
    const Tensor<S> &dy = t.grad(self);
    Tensor<S> &g = t.grad(xid);
#pragma omp simd
    for (int64_t i = 0; i < dy.size(); ++i) g[i] += dy[i] * (*mask)[i];
  });
}

template <typename S>
Var<S> Sum(Var<S> x) {
  Tape<S> &t = *x.tape;
  const Tensor<S> &xv = x.Val();
  double acc = 0;
  for (int64_t i = 0; i < xv.size(); ++i) acc += xv[i];
  Tensor<S> out({1});
  out[0] = static_cast<S>(acc);
  int xid = x.id;
  return t.Push(std::move(out), {xid}, [xid](Tape<S> &t, int self) {
    S d = t.grad(self)[0];
    Tensor<S> &g = t.grad(xid);
    for (int64_t i = 0; i < g.size(); ++i) g[i] += d;
  });
}

template <typename S>
Var<S> Mean(Var<S> x) {
  return Scale(Sum(x), static_cast<S>(1.0 / static_cast<double>(x.Val().size())));
}

// Sum of squared differences; mean_over_rows divides by the row count.
template <typename S>
Var<S> SquaredError(Var<S> a, Var<S> b, bool mean_over_rows = false) {
  Tape<S> &t = *a.tape;
  const Tensor<S> &av = a.Val(), &bv = b.Val();
  Check(av.shape == bv.shape, "SquaredError: shape mismatch");
  double scale = mean_over_rows ? 1.0 / static_cast<double>(av.rows()) : 1.0;
  double acc = 0;
  for (int64_t i = 0; i < av.size(); ++i) {
    double dlt = static_cast<double>(av[i]) - bv[i];
    acc += dlt * dlt;
  }
  Tensor<S> out({1});
  out[0] = static_cast<S>(acc * scale);
  int aid = a.id, bid = b.id;
  return t.Push(std::move(out), {aid, bid}, [aid, bid, scale](Tape<S> &t, int self) {
    S d = t.grad(self)[0];
    const Tensor<S> &av = t.val(aid), &bv = t.val(bid);
    Tensor<S> &ga = t.grad(aid);
    Tensor<S> &gb = t.grad(bid);
    S c = static_cast<S>(2.0 * scale) * d;
#pragma omp simd
    for (int64_t i = 0; i < av.size(); ++i) {
      S dlt = av[i] - bv[i];
      ga[i] += c * dlt;
      gb[i] -= c * dlt;
    }
  });
}

// Mean negative log-likelihood of integer targets under row logits.
template <typename S>
Var<S> CrossEntropy(Var<S> logits, std::vector<int32_t> targets) {
  Tape<S> &t = *logits.tape;
  const Tensor<S> &lv = logits.Val();
  int64_t rows = lv.rows(), v = lv.cols();
  Check(static_cast<int64_t>(targets.size()) == rows, "CrossEntropy: target count");
  for (int32_t y : targets)
    Check(y >= 0 && y < v, "CrossEntropy: target out of range");
  double acc = 0;
  for (int64_t i = 0; i < rows; ++i) {
    const S *lr = lv.ptr() + i * v;
    double mx = lr[0];
    for (int64_t j = 1; j < v; ++j) mx = std::max<double>(mx, lr[j]);
    double z = 0;
    for (int64_t j = 0; j < v; ++j) z += std::exp(lr[j] - mx);
    acc += (std::log(z) + mx) - lr[targets[static_cast<size_t>(i)]];
  }
  Tensor<S> out({1});
  out[0] = static_cast<S>(acc / static_cast<double>(rows));
  int lid = logits.id;
  auto tg = std::make_shared<std::vector<int32_t>>(std::move(targets));
  return t.Push(std::move(out), {lid}, [lid, tg, rows, v](Tape<S> &t, int self) {
    S d = t.grad(self)[0];
    const Tensor<S> &lv = t.val(lid);
    Tensor<S> &g = t.grad(lid);
    S inv_rows = static_cast<S>(1.0 / static_cast<double>(rows));
    for (int64_t i = 0; i < rows; ++i) {
      const S *lr = lv.ptr() + i * v;
      double mx = lr[0];
      for (int64_t j = 1; j < v; ++j) mx = std::max<double>(mx, lr[j]);
      double z = 0;
      for (int64_t j = 0; j < v; ++j) z += std::exp(lr[j] - mx);
      double inv_z = 1.0 / z;
      for (int64_t j = 0; j < v; ++j) {
        double p = std::exp(lr[j] - mx) * inv_z;
        g.ptr()[i * v + j] += d * inv_rows * static_cast<S>(p);
      }
      g.ptr()[i * v + (*tg)[static_cast<size_t>(i)]] -= d * inv_rows;
    }
  });
}

// w[0]*xs[0] + w[1]*xs[1] + ... for scalar vars.
template <typename S>
Var<S> WeightedSum(const std::vector<Var<S>> &xs, const std::vector<double> &w) {
  Check(!xs.empty() && xs.size() == w.size(), "WeightedSum: bad inputs");
  Tape<S> &t = *xs[0].tape;
  double acc = 0;
  std::vector<int> ids;
  for (size_t i = 0; i < xs.size(); ++i) {
    Check(xs[i].Val().size() == 1, "WeightedSum: scalar inputs only");
    acc += w[i] * static_cast<double>(xs[i].Val()[0]);
    ids.push_back(xs[i].id);
  }
  Tensor<S> out({1});
  out[0] = static_cast<S>(acc);
  auto ws = std::make_shared<std::vector<double>>(w);
  auto pid = std::make_shared<std::vector<int>>(ids);
  return t.Push(std::move(out), ids, [pid, ws](Tape<S> &t, int self) {
    S d = t.grad(self)[0];
    for (size_t i = 0; i < pid->size(); ++i)
      t.grad((*pid)[i])[0] += d * static_cast<S>((*ws)[i]);
  });
}

}  // namespace ops
}  // namespace tdb

#endif  // TDB_TAPE_HPP_
