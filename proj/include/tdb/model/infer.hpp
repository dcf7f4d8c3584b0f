// infer.hpp: incremental tape-free transformer forward with per-layer
// key/value caches, for greedy rollout decoding. Training and batch
// evaluation go through the tape; this path exists because the rollout
// baseline issues tens of thousands of single-token decodes and re-running
// a full forward per token would be quadratic in sequence length.
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

#ifndef TDB_MODEL_INFER_HPP_
#define TDB_MODEL_INFER_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "tdb/model/model.hpp"

namespace tdb {

// Streaming forward over the interleaved obs/act token stream. Copyable, so
// a shared context prefix can be advanced once and snapshotted per rollout.
// Supports the transformer trunk (vanilla and TDB); dropout is inference-off.
template <typename SC>
class InferenceEngine {
 public:
  explicit InferenceEngine(const Model<SC> *m) : m_(m) {
    Check(m_->cfg.arch != Arch::kLstm, "InferenceEngine: transformer only");
    layers_.resize(static_cast<size_t>(m_->cfg.n_layers));
    // Per-layer relative position projection rel_base @ wr, computed once.
    const int64_t L2 = m_->rel_base.rows();
    const int D = m_->cfg.d_model;
    const int64_t dh = D / m_->cfg.n_heads;
    rel_proj_.resize(layers_.size());
    for (size_t li = 0; li < layers_.size(); ++li) {
      rel_proj_[li].assign(static_cast<size_t>(L2 * dh), SC(0));
      kernels::serial::MatMulNN(m_->rel_base.ptr(),
                                m_->params[m_->idx.layers[li].wr].ptr(),
                                rel_proj_[li].data(), L2, dh, D);
    }
  }

  int64_t length() const { return t_len_; }

  // Appends one observation token (even stream positions).
  void AppendObs(int32_t x) {
    Check(x >= 0 && x < m_->cfg.vocab_obs, "InferenceEngine: obs out of range");
    Check(t_len_ % 2 == 0, "InferenceEngine: observation token out of turn");
    AppendRow(m_->params[m_->idx.emb_obs].ptr() +
              static_cast<int64_t>(x) * m_->cfg.d_model);
  }

  // Appends one action token (odd stream positions).
  void AppendAct(int32_t a) {
    Check(a >= 0 && a < m_->cfg.vocab_act, "InferenceEngine: act out of range");
    Check(t_len_ % 2 == 1, "InferenceEngine: action token out of turn");
    AppendRow(m_->params[m_->idx.emb_act].ptr() +
              static_cast<int64_t>(a) * m_->cfg.d_model);
  }

  // Next-observation logits from the most recent trunk output. For the
  // vanilla transformer this is the linear head on an action position.
  std::vector<SC> NextObsLogits() const {
    Check(m_->cfg.arch == Arch::kTransformer,
          "NextObsLogits: vanilla head only");
    Check(t_len_ > 0 && t_len_ % 2 == 0,
          "NextObsLogits: last token must be an action");
    const int D = m_->cfg.d_model, O = m_->cfg.vocab_obs;
    const Tensor<SC> &w = m_->params[m_->idx.van_w];
    const Tensor<SC> &b = m_->params[m_->idx.van_b];
    std::vector<SC> logits(static_cast<size_t>(O));
    kernels::serial::MatMulNN(last_out_.data(), w.ptr(), logits.data(), 1, O, D);
    for (int c = 0; c < O; ++c) logits[static_cast<size_t>(c)] += b[c];
    return logits;
  }

  int32_t GreedyNextObs() const {
    auto logits = NextObsLogits();
    int32_t am = 0;
    for (size_t c = 1; c < logits.size(); ++c)
      if (logits[c] > logits[static_cast<size_t>(am)])
        am = static_cast<int32_t>(c);
    return am;
  }

 private:
  struct LayerCache {
    std::vector<SC> k, v;  // t_len x D, appended row-wise
  };

  // One full trunk step for an embedded token row.
  void AppendRow(const SC *emb) {
    const ModelConfig &cfg = m_->cfg;
    const int D = cfg.d_model, H = cfg.d_mlp, nh = cfg.n_heads;
    const int64_t dh = D / nh;
    Check(t_len_ < 2 * static_cast<int64_t>(cfg.context_len),
          "InferenceEngine: context length exceeded");
    int64_t i = t_len_;

    std::vector<SC> x(emb, emb + D);
    std::vector<SC> h(D), q(D), k(D), v(D), attn(D), ff1(H), ff2(D);
    for (size_t li = 0; li < layers_.size(); ++li) {
      const LayerIdx &L = m_->idx.layers[li];
      LayerCache &cache = layers_[li];
      LayerNormRow(x.data(), L.ln1_g, L.ln1_b, h.data(), D);
      MatVecRow(h.data(), L.wq, q.data(), D, D);
      MatVecRow(h.data(), L.wk, k.data(), D, D);
      MatVecRow(h.data(), L.wv, v.data(), D, D);
      cache.k.insert(cache.k.end(), k.begin(), k.end());
      cache.v.insert(cache.v.end(), v.begin(), v.end());

      // Per-head causal attention with relative position scores:
      // s_ij = ((q_i + u) . k_j + (q_i + vb) . rel_{i-j}) / sqrt(dh).
      const Tensor<SC> &ub = m_->params[L.u_bias];
      const Tensor<SC> &vb = m_->params[L.v_bias];
      const SC *rel = rel_proj_[li].data();
      double scale = 1.0 / std::sqrt(static_cast<double>(dh));
      std::vector<double> scores(static_cast<size_t>(i + 1));
      for (int hh = 0; hh < nh; ++hh) {
        const SC *qh = q.data() + hh * dh;
        double mx = -1e300;
        for (int64_t j = 0; j <= i; ++j) {
          const SC *kj = cache.k.data() + j * D + hh * dh;
          const SC *rr = rel + (i - j) * dh;  // head-agnostic rel row (i - j)
          double s = 0;
          for (int64_t d = 0; d < dh; ++d) {
            s += (static_cast<double>(qh[d]) + ub[d]) * kj[d] +
                 (static_cast<double>(qh[d]) + vb[d]) * rr[d];
          }
          s *= scale;
          scores[static_cast<size_t>(j)] = s;
          mx = std::max(mx, s);
        }
        double z = 0;
        for (int64_t j = 0; j <= i; ++j) {
          scores[static_cast<size_t>(j)] =
              std::exp(scores[static_cast<size_t>(j)] - mx);
          z += scores[static_cast<size_t>(j)];
        }
        for (int64_t d = 0; d < dh; ++d) {
          double acc = 0;
          for (int64_t j = 0; j <= i; ++j)
            acc += scores[static_cast<size_t>(j)] / z *
                   static_cast<double>(cache.v[j * D + hh * dh + d]);
          attn[static_cast<size_t>(hh * dh + d)] = static_cast<SC>(acc);
        }
      }
      MatVecRow(attn.data(), L.wo, ff2.data(), D, D);
      for (int d = 0; d < D; ++d) x[static_cast<size_t>(d)] += ff2[static_cast<size_t>(d)];

      LayerNormRow(x.data(), L.ln2_g, L.ln2_b, h.data(), D);
      MatVecRow(h.data(), L.mlp_w1, ff1.data(), D, H);
      const Tensor<SC> &b1 = m_->params[L.mlp_b1];
      constexpr double kInvSqrt2 = 0.70710678118654752440;
      for (int d = 0; d < H; ++d) {
        double s = static_cast<double>(ff1[static_cast<size_t>(d)]) + b1[d];
        ff1[static_cast<size_t>(d)] =
            static_cast<SC>(0.5 * s * (1.0 + std::erf(s * kInvSqrt2)));
      }
      MatVecRow(ff1.data(), L.mlp_w2, ff2.data(), H, D);
      const Tensor<SC> &b2 = m_->params[L.mlp_b2];
      for (int d = 0; d < D; ++d)
        x[static_cast<size_t>(d)] += ff2[static_cast<size_t>(d)] + b2[d];
    }
    LayerNormRow(x.data(), m_->idx.lnf_g, m_->idx.lnf_b, x.data(), D);
    last_out_ = x;
    ++t_len_;
  }

  void LayerNormRow(const SC *in, int gamma, int beta, SC *out, int d) const {
    const Tensor<SC> &g = m_->params[gamma];
    const Tensor<SC> &b = m_->params[beta];
    double mean = 0;
    for (int j = 0; j < d; ++j) mean += in[j];
    mean /= d;
    double var = 0;
    for (int j = 0; j < d; ++j) {
      double c = in[j] - mean;
      var += c * c;
    }
    var /= d;
    double rstd = 1.0 / std::sqrt(var + 1e-5);
    for (int j = 0; j < d; ++j)
      out[j] = static_cast<SC>((in[j] - mean) * rstd) * g[j] + b[j];
  }

  void MatVecRow(const SC *in, int w, SC *out, int rows, int cols) const {
    const Tensor<SC> &wt = m_->params[w];
    kernels::serial::MatMulNN(in, wt.ptr(), out, 1, cols, rows);
  }

  const Model<SC> *m_;
  std::vector<LayerCache> layers_;
  std::vector<std::vector<SC>> rel_proj_;  // per layer: [2L, dh]
  std::vector<SC> last_out_;
  int64_t t_len_ = 0;
};

}  // namespace tdb

#endif  // TDB_MODEL_INFER_HPP_
