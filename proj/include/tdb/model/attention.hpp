// attention.hpp: fused multi-head causal self-attention with relative
// positional scores (content/position additive decomposition, one shared
// position projection per layer).
//
// Fusing the whole block into one tape node keeps the per-step memory at one
// probability matrix per head instead of five score-sized temporaries.
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

#ifndef TDB_MODEL_ATTENTION_HPP_
#define TDB_MODEL_ATTENTION_HPP_

#include <cmath>
#include <memory>
#include <vector>

#include "tdb/tape.hpp"

namespace tdb {
namespace ops {

namespace attn_detail {

template <typename S>
void CopyHead(const Tensor<S> &x, int64_t t_len, int64_t d_model, int64_t head,
              int64_t dh, S *out) {
  for (int64_t i = 0; i < t_len; ++i)
    std::copy(x.ptr() + i * d_model + head * dh,
              x.ptr() + i * d_model + head * dh + dh, out + i * dh);
}

}  // namespace attn_detail

// q, k, v: [T, D]; rel: [T, dh] (row d = embedding of key distance d);
// u_bias, v_bias: [dh] content/position score biases shared across heads.
// Row i of the output attends to positions j <= i only; masked positions
// carry exactly zero probability, so causality is exact, not approximate.
template <typename S>
Var<S> RelCausalAttention(Var<S> q, Var<S> k, Var<S> v, Var<S> rel,
                          Var<S> u_bias, Var<S> v_bias, int n_heads) {
  Tape<S> &t = *q.tape;
  const Tensor<S> &qv = q.Val();
  int64_t t_len = qv.dim(0), d_model = qv.dim(1);
  Check(d_model % n_heads == 0, "RelCausalAttention: D % heads != 0");
  int64_t dh = d_model / n_heads;
  Check(k.Val().shape == qv.shape && v.Val().shape == qv.shape,
        "RelCausalAttention: q/k/v shape mismatch");
  Check(rel.Val().dim(0) >= t_len && rel.Val().dim(1) == dh,
        "RelCausalAttention: rel table too small");
  Check(u_bias.Val().size() == dh && v_bias.Val().size() == dh,
        "RelCausalAttention: bias size");
  S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));

  const Tensor<S> &kv = k.Val(), &vv = v.Val(), &rv = rel.Val();
  const Tensor<S> &ub = u_bias.Val(), &vb = v_bias.Val();

  auto probs = std::make_shared<Tensor<S>>(Shape{n_heads, t_len, t_len});
  Tensor<S> out({t_len, d_model});

  std::vector<S> qh(t_len * dh), kh(t_len * dh), vh(t_len * dh);
  std::vector<S> qu(t_len * dh), qw(t_len * dh);
  std::vector<S> content(t_len * t_len), posmat(t_len * t_len);

  for (int h = 0; h < n_heads; ++h) {
    attn_detail::CopyHead(qv, t_len, d_model, h, dh, qh.data());
    attn_detail::CopyHead(kv, t_len, d_model, h, dh, kh.data());
    attn_detail::CopyHead(vv, t_len, d_model, h, dh, vh.data());
    for (int64_t i = 0; i < t_len; ++i)
      for (int64_t j = 0; j < dh; ++j) {
        qu[i * dh + j] = qh[i * dh + j] + ub[j];
        qw[i * dh + j] = qh[i * dh + j] + vb[j];
      }
    kernels::MatMulNT(qu.data(), kh.data(), content.data(), t_len, t_len, dh);
    kernels::MatMulNT(qw.data(), rv.ptr(), posmat.data(), t_len, t_len, dh);

    S *p = probs->ptr() + static_cast<int64_t>(h) * t_len * t_len;
    for (int64_t i = 0; i < t_len; ++i) {
      S *pr = p + i * t_len;
      double mx = -1e300;
      for (int64_t j = 0; j <= i; ++j) {
        double s = (content[i * t_len + j] + posmat[i * t_len + (i - j)]) *
                   static_cast<double>(scale);
        pr[j] = static_cast<S>(s);
        mx = std::max(mx, s);
      }
      double z = 0;
      for (int64_t j = 0; j <= i; ++j) {
        double e = std::exp(static_cast<double>(pr[j]) - mx);
        pr[j] = static_cast<S>(e);
        z += e;
      }
      double inv = 1.0 / z;
      for (int64_t j = 0; j <= i; ++j) pr[j] = static_cast<S>(pr[j] * inv);
      for (int64_t j = i + 1; j < t_len; ++j) pr[j] = S(0);
    }
    // out_h = P @ Vh, written back into the head's column block
    std::vector<S> oh(t_len * dh);
    kernels::MatMulNN(p, vh.data(), oh.data(), t_len, dh, t_len);
    for (int64_t i = 0; i < t_len; ++i)
      std::copy(oh.data() + i * dh, oh.data() + (i + 1) * dh,
                out.ptr() + i * d_model + h * dh);
  }

  int qid = q.id, kid = k.id, vid = v.id, rid = rel.id;
  int uid = u_bias.id, wid = v_bias.id;
  return t.Push(
      std::move(out), {qid, kid, vid, rid, uid, wid},
      [=](Tape<S> &t, int self) {
        const Tensor<S> &dy = t.grad(self);
        const Tensor<S> &qv = t.val(qid), &kv = t.val(kid), &vv = t.val(vid);
        const Tensor<S> &rv = t.val(rid), &ub = t.val(uid), &vb = t.val(wid);
        Tensor<S> &gq = t.grad(qid);
        Tensor<S> &gk = t.grad(kid);
        Tensor<S> &gv = t.grad(vid);
        Tensor<S> &gr = t.grad(rid);
        Tensor<S> &gu = t.grad(uid);
        Tensor<S> &gw = t.grad(wid);

        std::vector<S> qh(t_len * dh), kh(t_len * dh), vh(t_len * dh);
        std::vector<S> qu(t_len * dh), qw(t_len * dh), dyh(t_len * dh);
        std::vector<S> dp(t_len * t_len), ds(t_len * t_len), dspos(t_len * t_len);
        std::vector<S> buf(t_len * dh);

        for (int h = 0; h < n_heads; ++h) {
          attn_detail::CopyHead(qv, t_len, d_model, h, dh, qh.data());
          attn_detail::CopyHead(kv, t_len, d_model, h, dh, kh.data());
          attn_detail::CopyHead(vv, t_len, d_model, h, dh, vh.data());
          attn_detail::CopyHead(dy, t_len, d_model, h, dh, dyh.data());
          for (int64_t i = 0; i < t_len; ++i)
            for (int64_t j = 0; j < dh; ++j) {
              qu[i * dh + j] = qh[i * dh + j] + ub[j];
              qw[i * dh + j] = qh[i * dh + j] + vb[j];
            }
          const S *p = probs->ptr() + static_cast<int64_t>(h) * t_len * t_len;

          // dV_h = P^T @ dy_h
          kernels::MatMulTN(p, dyh.data(), buf.data(), t_len, dh, t_len);
          for (int64_t i = 0; i < t_len; ++i)
            kernels::serial::Axpy(S(1), buf.data() + i * dh,
                                  gv.ptr() + i * d_model + h * dh, dh);

          // dP = dy_h @ V_h^T, then softmax backward into dS (masked zone 0)
          kernels::MatMulNT(dyh.data(), vh.data(), dp.data(), t_len, t_len, dh);
          for (int64_t i = 0; i < t_len; ++i) {
            const S *pr = p + i * t_len;
            const S *dpr = dp.data() + i * t_len;
            double dot = 0;
            for (int64_t j = 0; j <= i; ++j)
              dot += static_cast<double>(pr[j]) * dpr[j];
            S *dsr = ds.data() + i * t_len;
            S *dspr = dspos.data() + i * t_len;
            for (int64_t j = 0; j < t_len; ++j) {
              dsr[j] = (j <= i) ? static_cast<S>(pr[j] * (dpr[j] - dot)) * scale
                                : S(0);
              dspr[j] = S(0);
            }
            for (int64_t j = 0; j <= i; ++j) dspr[i - j] = dsr[j];
          }

          // content branch: dQu = dS @ K_h ; dK_h = dS^T @ Qu
          kernels::MatMulNN(ds.data(), kh.data(), buf.data(), t_len, dh, t_len);
          for (int64_t i = 0; i < t_len; ++i) {
            kernels::serial::Axpy(S(1), buf.data() + i * dh,
                                  gq.ptr() + i * d_model + h * dh, dh);
            kernels::serial::Axpy(S(1), buf.data() + i * dh, gu.ptr(), dh);
          }
          kernels::MatMulTN(ds.data(), qu.data(), buf.data(), t_len, dh, t_len);
          for (int64_t i = 0; i < t_len; ++i)
            kernels::serial::Axpy(S(1), buf.data() + i * dh,
                                  gk.ptr() + i * d_model + h * dh, dh);

          // position branch: dQw = dSpos @ R ; dR += dSpos^T @ Qw
          kernels::MatMulNN(dspos.data(), rv.ptr(), buf.data(), t_len, dh, t_len);
          for (int64_t i = 0; i < t_len; ++i) {
            kernels::serial::Axpy(S(1), buf.data() + i * dh,
                                  gq.ptr() + i * d_model + h * dh, dh);
            kernels::serial::Axpy(S(1), buf.data() + i * dh, gw.ptr(), dh);
          }
          kernels::MatMulTN(dspos.data(), qw.data(), buf.data(), t_len, dh, t_len);
          for (int64_t i = 0; i < t_len; ++i)
            kernels::serial::Axpy(S(1), buf.data() + i * dh, gr.ptr() + i * dh, dh);
        }
      });
}

}  // namespace ops
}  // namespace tdb

#endif  // TDB_MODEL_ATTENTION_HPP_
