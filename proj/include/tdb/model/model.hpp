// model.hpp: causal transformer / LSTM sequence models, the discrete
// bottlenecks with straight-through quantization, and the training losses.
//
// Token layout: a trajectory (x_1, a_1, ..., x_N, a_N) becomes a stream of
// 2N embeddings. Trunk outputs at observation positions (stream index 2n,
// 0-based; T_{2n-1} in 1-based paper numbering) feed the bottlenecks; outputs
// at action positions feed the vanilla next-observation head.
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

#ifndef TDB_MODEL_MODEL_HPP_
#define TDB_MODEL_MODEL_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "tdb/model/attention.hpp"
#include "tdb/model/config.hpp"
#include "tdb/params.hpp"
#include "tdb/tape.hpp"
#include "tdb/trajectory.hpp"

namespace tdb {

// Parameter indices into the ParamStore, resolved once per model build.
struct LayerIdx {
  int ln1_g, ln1_b, wq, wk, wv, wo, wr, u_bias, v_bias;
  int ln2_g, ln2_b, mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

struct HeadIdx {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};

struct ModelIdx {
  int emb_obs = -1, emb_act = -1;
  std::vector<LayerIdx> layers;
  int lnf_g = -1, lnf_b = -1;
  int van_w = -1, van_b = -1;
  std::vector<int> codebooks;
  std::vector<HeadIdx> f;  // multi-step prediction heads f^(0)..f^(S-1)
  HeadIdx g;               // projection MLP for L_enc
  int lstm_wx = -1, lstm_wh = -1, lstm_b = -1;
};

// Codes allowed per observation label; index x -> sorted code list.
using ClonePartition = std::vector<std::vector<int32_t>>;

inline ClonePartition MakeClonePartition(int K, int vocab_obs) {
  Check(K >= vocab_obs, "clone partition needs K >= vocab_obs");
  ClonePartition part(static_cast<size_t>(vocab_obs));
  for (int32_t k = 0; k < K; ++k)
    part[static_cast<size_t>(k % vocab_obs)].push_back(k);
  return part;
}

template <typename SC>
struct Model {
  ModelConfig cfg;
  ParamStore<SC> params;
  ModelIdx idx;
  Tensor<SC> rel_base;       // sinusoidal relative-distance table [2L, D]
  ClonePartition partition;  // used only when cfg.clone_structured

  static Model Init(const ModelConfig &cfg, Rng &rng) {
    cfg.Validate();
    Model m;
    m.cfg = cfg;
    m.BuildParams(rng);
    m.Finish();
    return m;
  }

  // Rebuild derived state after params were loaded from a checkpoint.
  static Model FromParams(const ModelConfig &cfg, ParamStore<SC> loaded) {
    cfg.Validate();
    Rng scratch(0);
    Model m;
    m.cfg = cfg;
    m.BuildParams(scratch);
    Check(loaded.size() == m.params.size(),
          "Model::FromParams: parameter count mismatch");
    for (int p = 0; p < loaded.size(); ++p) {
      Check(loaded.names[static_cast<size_t>(p)] ==
                m.params.names[static_cast<size_t>(p)],
            "Model::FromParams: parameter name mismatch at " +
                m.params.names[static_cast<size_t>(p)]);
      Check(loaded[p].shape == m.params[p].shape,
            "Model::FromParams: shape mismatch at " +
                m.params.names[static_cast<size_t>(p)]);
    }
    m.params = std::move(loaded);
    m.Finish();
    return m;
  }

  void BuildParams(Rng &rng) {
    const int D = cfg.d_model, H = cfg.d_mlp, O = cfg.vocab_obs;
    const int dh = D / cfg.n_heads;
    params = ParamStore<SC>();
    idx = ModelIdx();
    idx.emb_obs = params.AddInit("emb/obs", {O, D}, rng);
    idx.emb_act = params.AddInit("emb/act", {cfg.vocab_act, D}, rng);
    if (cfg.arch == Arch::kLstm) {
      idx.lstm_wx = params.AddInit("lstm/wx", {D, 4 * D}, rng);
      idx.lstm_wh = params.AddInit("lstm/wh", {D, 4 * D}, rng);
      idx.lstm_b = params.AddZeros("lstm/b", {4 * D});
    } else {
      for (int l = 0; l < cfg.n_layers; ++l) {
        std::string p = "layer" + std::to_string(l) + "/";
        LayerIdx li;
        li.ln1_g = params.AddOnes(p + "ln1/gamma", {D});
        li.ln1_b = params.AddZeros(p + "ln1/beta", {D});
        li.wq = params.AddInit(p + "attn/wq", {D, D}, rng);
        li.wk = params.AddInit(p + "attn/wk", {D, D}, rng);
        li.wv = params.AddInit(p + "attn/wv", {D, D}, rng);
        li.wo = params.AddInit(p + "attn/wo", {D, D}, rng);
        li.wr = params.AddInit(p + "attn/wr", {D, dh}, rng);
        li.u_bias = params.AddZeros(p + "attn/u", {dh});
        li.v_bias = params.AddZeros(p + "attn/v", {dh});
        li.ln2_g = params.AddOnes(p + "ln2/gamma", {D});
        li.ln2_b = params.AddZeros(p + "ln2/beta", {D});
        li.mlp_w1 = params.AddInit(p + "mlp/w1", {D, H}, rng);
        li.mlp_b1 = params.AddZeros(p + "mlp/b1", {H});
        li.mlp_w2 = params.AddInit(p + "mlp/w2", {H, D}, rng);
        li.mlp_b2 = params.AddZeros(p + "mlp/b2", {D});
        idx.layers.push_back(li);
      }
      idx.lnf_g = params.AddOnes("final_ln/gamma", {D});
      idx.lnf_b = params.AddZeros("final_ln/beta", {D});
    }
    if (cfg.arch == Arch::kTdb) {
      for (int m = 0; m < cfg.M; ++m)
        idx.codebooks.push_back(params.AddInit(
            "codebook" + std::to_string(m), {cfg.K, cfg.code_dim()}, rng));
      for (int s = 0; s < cfg.S; ++s) {
        std::string p = "head_f" + std::to_string(s) + "/";
        HeadIdx h;
        h.w1 = params.AddInit(p + "w1", {(s + 2) * D, H}, rng);
        h.b1 = params.AddZeros(p + "b1", {H});
        h.w2 = params.AddInit(p + "w2", {H, O}, rng);
        h.b2 = params.AddZeros(p + "b2", {O});
        idx.f.push_back(h);
      }
      if (cfg.use_enc_loss) {
        idx.g.w1 = params.AddInit("head_g/w1", {2 * D, H}, rng);
        idx.g.b1 = params.AddZeros("head_g/b1", {H});
        idx.g.w2 = params.AddInit("head_g/w2", {H, D}, rng);
        idx.g.b2 = params.AddZeros("head_g/b2", {D});
      }
    } else {
      idx.van_w = params.AddInit("head_vanilla/w", {D, O}, rng);
      idx.van_b = params.AddZeros("head_vanilla/b", {O});
    }
  }

  void Finish() {
    if (cfg.arch != Arch::kLstm) {
      const int D = cfg.d_model;
      int64_t L = 2 * static_cast<int64_t>(cfg.context_len);
      rel_base = Tensor<SC>({L, D});
      for (int64_t r = 0; r < L; ++r)
        for (int i = 0; i < D; i += 2) {
          double freq = std::pow(10000.0, -static_cast<double>(i) / D);
          rel_base[r * D + i] = static_cast<SC>(std::sin(r * freq));
          if (i + 1 < D)
            rel_base[r * D + i + 1] = static_cast<SC>(std::cos(r * freq));
        }
    }
    if (cfg.clone_structured && cfg.arch == Arch::kTdb)
      partition = MakeClonePartition(cfg.K, cfg.vocab_obs);
  }
};

// One tape leaf per parameter, in ParamStore order.
template <typename SC>
std::vector<Var<SC>> MakeLeaves(Tape<SC> &t, const ParamStore<SC> &ps,
                                bool requires_grad = true) {
  std::vector<Var<SC>> out;
  out.reserve(static_cast<size_t>(ps.size()));
  for (int p = 0; p < ps.size(); ++p) out.push_back(t.Leaf(ps[p], requires_grad));
  return out;
}

// Nearest-code index per row of e against codebook cb [K, d]; squared L2,
// lowest index wins ties. `allowed` (optional) restricts candidates.
template <typename SC>
std::vector<int32_t> QuantizeRows(const Tensor<SC> &e, const Tensor<SC> &cb,
                                  const std::vector<int32_t> *allowed_rowwise =
                                      nullptr) {
  (void)allowed_rowwise;
  int64_t n = e.rows(), d = e.cols(), K = cb.rows();
  Check(cb.cols() == d, "QuantizeRows: dim mismatch");
  Check(e.AllFinite(), "QuantizeRows: non-finite encoder output");
  std::vector<int32_t> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    double best = 0;
    int32_t best_k = -1;
    for (int64_t k = 0; k < K; ++k) {
      double dist = 0;
      const SC *er = e.ptr() + i * d;
      const SC *cr = cb.ptr() + k * d;
      for (int64_t j = 0; j < d; ++j) {
        double diff = static_cast<double>(er[j]) - static_cast<double>(cr[j]);
        dist += diff * diff;
      }
      if (best_k < 0 || dist < best) {
        best = dist;
        best_k = static_cast<int32_t>(k);
      }
    }
    out[static_cast<size_t>(i)] = best_k;
  }
  return out;
}

// Quantize restricted to the partition class of each row's observation.
template <typename SC>
std::vector<int32_t> CloneQuantizeRows(const Tensor<SC> &e, const Tensor<SC> &cb,
                                       const std::vector<int32_t> &obs,
                                       const ClonePartition &part) {
  int64_t n = e.rows(), d = e.cols();
  Check(static_cast<int64_t>(obs.size()) == n, "CloneQuantizeRows: obs size");
  std::vector<int32_t> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const auto &cand = part[static_cast<size_t>(obs[static_cast<size_t>(i)])];
    Check(!cand.empty(), "CloneQuantizeRows: empty partition class");
    double best = 0;
    int32_t best_k = -1;
    for (int32_t k : cand) {
      double dist = 0;
      const SC *er = e.ptr() + i * d;
      const SC *cr = cb.ptr() + static_cast<int64_t>(k) * d;
      for (int64_t j = 0; j < d; ++j) {
        double diff = static_cast<double>(er[j]) - static_cast<double>(cr[j]);
        dist += diff * diff;
      }
      if (best_k < 0 || dist < best) {
        best = dist;
        best_k = k;
      }
    }
    out[static_cast<size_t>(i)] = best_k;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

// Transformer trunk over the interleaved stream; returns [2N, D] outputs.
template <typename SC>
Var<SC> Trunk(Tape<SC> &t, const Model<SC> &m, const std::vector<Var<SC>> &p,
              const Trajectory &traj) {
  const ModelConfig &cfg = m.cfg;
  const ModelIdx &ix = m.idx;
  int64_t N = traj.length();
  Check(N >= 1, "Trunk: empty trajectory");
  Check(N <= cfg.context_len, "Trunk: trajectory exceeds context length");
  for (int32_t x : traj.obs)
    Check(x >= 0 && x < cfg.vocab_obs, "Trunk: observation out of vocabulary");
  for (int32_t a : traj.act)
    Check(a >= 0 && a < cfg.vocab_act, "Trunk: action out of vocabulary");

  auto obs_emb = ops::Gather(p[ix.emb_obs], traj.obs);
  auto act_emb = ops::Gather(p[ix.emb_act], traj.act);
  auto x = ops::InterleaveRows(obs_emb, act_emb);  // [2N, D]
  x = ops::Dropout(x, cfg.dropout);
  auto rel = t.Constant(m.rel_base);
  auto rel_rows = ops::Rows(rel, 0, 2 * N);
  for (const LayerIdx &L : ix.layers) {
    auto h = ops::LayerNorm(x, p[L.ln1_g], p[L.ln1_b]);
    auto q = ops::MatMul(h, p[L.wq]);
    auto k = ops::MatMul(h, p[L.wk]);
    auto v = ops::MatMul(h, p[L.wv]);
    auto rel_l = ops::MatMul(rel_rows, p[L.wr]);
    auto attn = ops::RelCausalAttention(q, k, v, rel_l, p[L.u_bias], p[L.v_bias],
                                        cfg.n_heads);
    x = ops::Add(x, ops::Dropout(ops::MatMul(attn, p[L.wo]), cfg.dropout));
    auto h2 = ops::LayerNorm(x, p[L.ln2_g], p[L.ln2_b]);
    auto ff = ops::AddBias(ops::MatMul(h2, p[L.mlp_w1]), p[L.mlp_b1]);
    ff = ops::AddBias(ops::MatMul(ops::Gelu(ff), p[L.mlp_w2]), p[L.mlp_b2]);
    x = ops::Add(x, ops::Dropout(ff, cfg.dropout));
  }
  return ops::LayerNorm(x, p[ix.lnf_g], p[ix.lnf_b]);
}

template <typename SC>
Var<SC> MlpHead(const std::vector<Var<SC>> &p, const HeadIdx &h, Var<SC> in) {
  auto hidden = ops::Gelu(ops::AddBias(ops::MatMul(in, p[h.w1]), p[h.b1]));
  return ops::AddBias(ops::MatMul(hidden, p[h.w2]), p[h.b2]);
}

template <typename SC>
struct ForwardResult {
  Var<SC> total;                          // training loss for this sample
  Var<SC> loss_obs, loss_bott, loss_enc;  // invalid Vars when unused
  std::vector<std::vector<int32_t>> codes;  // [N][M] bottleneck assignments
  Var<SC> next_logits;                    // next-obs logits (s=0 head) [N-1, O']
  int64_t correct = 0, predictions = 0;   // next-obs accuracy counts
};

template <typename SC>
void CountAccuracy(const Tensor<SC> &logits, const std::vector<int32_t> &obs,
                   int64_t first_target, ForwardResult<SC> *r) {
  int64_t rows = logits.rows(), O = logits.cols();
  for (int64_t i = 0; i < rows; ++i) {
    const SC *row = logits.ptr() + i * O;
    int64_t am = 0;
    for (int64_t c = 1; c < O; ++c)
      if (row[c] > row[am]) am = c;
    if (am == obs[static_cast<size_t>(first_target + i)]) ++r->correct;
    ++r->predictions;
  }
}

// The teacher's quantized, row-normalized codes at observation positions.
// Runs the teacher trunk gradient-free on its own tape.
template <typename SC>
Tensor<SC> TeacherCodes(const Model<SC> &teacher, const Trajectory &traj) {
  Tape<SC> t;
  t.training = false;
  auto p = MakeLeaves(t, teacher.params, /*requires_grad=*/false);
  auto trunk = Trunk(t, teacher, p, traj);
  Tensor<SC> E = ops::EveryOtherRow(trunk, /*odd=*/false).Val();
  int64_t N = E.rows();
  const int dm = teacher.cfg.code_dim();
  Tensor<SC> code({N, static_cast<int64_t>(teacher.cfg.d_model)});
  for (int m = 0; m < teacher.cfg.M; ++m) {
    Tensor<SC> slice({N, dm});
    for (int64_t i = 0; i < N; ++i)
      std::copy(E.ptr() + i * E.cols() + m * dm,
                E.ptr() + i * E.cols() + (m + 1) * dm, slice.ptr() + i * dm);
    const Tensor<SC> &cb = teacher.params[teacher.idx.codebooks[static_cast<size_t>(m)]];
    std::vector<int32_t> ids =
        teacher.cfg.clone_structured
            ? CloneQuantizeRows(slice, cb, traj.obs, teacher.partition)
            : QuantizeRows(slice, cb);
    for (int64_t i = 0; i < N; ++i)
      std::copy(cb.ptr() + static_cast<int64_t>(ids[static_cast<size_t>(i)]) * dm,
                cb.ptr() + (static_cast<int64_t>(ids[static_cast<size_t>(i)]) + 1) * dm,
                code.ptr() + i * code.cols() + m * dm);
  }
  // Row-wise L2 normalization with the same epsilon as the student branch.
  for (int64_t i = 0; i < N; ++i) {
    double norm = 0;
    SC *row = code.ptr() + i * code.cols();
    for (int64_t j = 0; j < code.cols(); ++j)
      norm += static_cast<double>(row[j]) * static_cast<double>(row[j]);
    double inv = 1.0 / (std::sqrt(norm) + 1e-8);
    for (int64_t j = 0; j < code.cols(); ++j)
      row[j] = static_cast<SC>(row[j] * inv);
  }
  return code;
}

// Full TDB forward: multi-step observation loss, VQ loss, optional L_enc.
// `teacher` may be null when cfg.use_enc_loss is false.
//
// `identity_bottleneck` replaces the quantizer by the identity (as if the
// codebook contained every encoder output exactly). In that regime the
// straight-through estimator coincides with the true derivative, which makes
// the full loss amenable to finite-difference verification; the VQ terms are
// identically zero there and are dropped.
template <typename SC>
ForwardResult<SC> ForwardTdb(Tape<SC> &t, const Model<SC> &m,
                             const std::vector<Var<SC>> &p,
                             const Trajectory &traj,
                             const Model<SC> *teacher,
                             bool identity_bottleneck = false) {
  const ModelConfig &cfg = m.cfg;
  const ModelIdx &ix = m.idx;
  int64_t N = traj.length();
  Check(N >= cfg.S + 1, "ForwardTdb: trajectory too short for S");

  ForwardResult<SC> r;
  auto trunk = Trunk(t, m, p, traj);
  auto E = ops::EveryOtherRow(trunk, /*odd=*/false);  // [N, D] obs outputs
  auto act_emb = ops::Gather(p[ix.emb_act], traj.act);

  const int dm = cfg.code_dim();
  r.codes.assign(static_cast<size_t>(N), std::vector<int32_t>());
  std::vector<Var<SC>> st_slices;
  std::vector<Var<SC>> bott_terms;
  std::vector<double> bott_w;
  for (int mi = 0; mi < cfg.M; ++mi) {
    auto e_m = cfg.M == 1 ? E : ops::Cols(E, mi * dm, dm);
    // Read the codebook through the tape leaf so the forward is a pure
    // function of the leaf tensors.
    const Tensor<SC> &cb = p[ix.codebooks[static_cast<size_t>(mi)]].Val();
    std::vector<int32_t> ids =
        cfg.clone_structured
            ? CloneQuantizeRows(e_m.Val(), cb, traj.obs, m.partition)
            : QuantizeRows(e_m.Val(), cb);
    for (int64_t i = 0; i < N; ++i)
      r.codes[static_cast<size_t>(i)].push_back(ids[static_cast<size_t>(i)]);
    if (identity_bottleneck) {
      st_slices.push_back(e_m);
      continue;
    }
    auto code_var = ops::Gather(p[ix.codebooks[static_cast<size_t>(mi)]], ids);
    // Eq. (3): ||code - sg(e)||^2 + beta ||sg(code) - e||^2, summed.
    bott_terms.push_back(ops::SquaredError(code_var, ops::StopGradient(e_m)));
    bott_w.push_back(1.0);
    bott_terms.push_back(ops::SquaredError(ops::StopGradient(code_var), e_m));
    bott_w.push_back(cfg.beta);
    // Decoder input: forward is the code, backward flows to the encoder.
    st_slices.push_back(ops::StraightThrough(e_m, code_var.Val()));
  }
  if (!identity_bottleneck) r.loss_bott = ops::WeightedSum(bott_terms, bott_w);
  auto code_full = cfg.M == 1 ? st_slices[0] : ops::ConcatCols(st_slices);

  // Eq. (4): mean over S of per-step cross entropies; S=1 is exactly Eq. (1).
  std::vector<Var<SC>> ces;
  std::vector<double> ce_w;
  for (int s = 0; s < cfg.S; ++s) {
    int64_t rows = N - 1 - s;
    std::vector<Var<SC>> parts;
    parts.push_back(ops::Rows(code_full, 0, rows));
    for (int j = 0; j <= s; ++j) parts.push_back(ops::Rows(act_emb, j, rows));
    auto logits = MlpHead(p, ix.f[static_cast<size_t>(s)],
                          parts.size() == 1 ? parts[0] : ops::ConcatCols(parts));
    std::vector<int32_t> targets(traj.obs.begin() + s + 1, traj.obs.end());
    auto ce = ops::CrossEntropy(logits, targets);
    ces.push_back(ce);
    ce_w.push_back(1.0 / cfg.S);
    if (s == 0) {
      r.next_logits = logits;
      CountAccuracy(logits.Val(), traj.obs, 1, &r);
    }
  }
  r.loss_obs = cfg.S == 1 ? ces[0] : ops::WeightedSum(ces, ce_w);

  std::vector<Var<SC>> total_terms{r.loss_obs};
  if (r.loss_bott.valid()) total_terms.push_back(r.loss_bott);
  if (cfg.use_enc_loss) {
    Check(teacher != nullptr, "ForwardTdb: teacher required for L_enc");
    Tensor<SC> teacher_code = TeacherCodes(*teacher, traj);
    Tensor<SC> target({N - 1, teacher_code.cols()});
    std::copy(teacher_code.ptr() + teacher_code.cols(),
              teacher_code.ptr() + teacher_code.size(), target.ptr());
    auto student_in = ops::ConcatCols(std::vector<Var<SC>>{
        ops::Rows(code_full, 0, N - 1), ops::Rows(act_emb, 0, N - 1)});
    auto proj = ops::L2NormalizeRows(MlpHead(p, ix.g, student_in));
    // Mean over timesteps keeps the term O(1) against the mean-reduced L_obs.
    r.loss_enc =
        ops::Scale(ops::SquaredError(proj, t.Constant(std::move(target))),
                   SC(1.0 / static_cast<double>(N - 1)));
    total_terms.push_back(r.loss_enc);
  }
  if (total_terms.size() == 1)
    r.total = total_terms[0];
  else if (total_terms.size() == 2)
    r.total = ops::Add(total_terms[0], total_terms[1]);
  else
    r.total = ops::WeightedSum(total_terms, {1.0, 1.0, 1.0});
  return r;
}

// Vanilla transformer baseline: linear head on action-position outputs.
template <typename SC>
ForwardResult<SC> ForwardVanilla(Tape<SC> &t, const Model<SC> &m,
                                 const std::vector<Var<SC>> &p,
                                 const Trajectory &traj) {
  int64_t N = traj.length();
  Check(N >= 2, "ForwardVanilla: trajectory too short");
  ForwardResult<SC> r;
  auto trunk = Trunk(t, m, p, traj);
  auto A = ops::EveryOtherRow(trunk, /*odd=*/true);  // [N, D] action outputs
  auto logits = ops::AddBias(ops::MatMul(ops::Rows(A, 0, N - 1), p[m.idx.van_w]),
                             p[m.idx.van_b]);
  std::vector<int32_t> targets(traj.obs.begin() + 1, traj.obs.end());
  r.loss_obs = ops::CrossEntropy(logits, targets);
  r.next_logits = logits;
  r.total = r.loss_obs;
  CountAccuracy(logits.Val(), traj.obs, 1, &r);
  return r;
}

// Single-layer LSTM baseline over the same interleaved stream.
template <typename SC>
ForwardResult<SC> ForwardLstm(Tape<SC> &t, const Model<SC> &m,
                              const std::vector<Var<SC>> &p,
                              const Trajectory &traj) {
  const ModelConfig &cfg = m.cfg;
  const ModelIdx &ix = m.idx;
  int64_t N = traj.length();
  Check(N >= 2, "ForwardLstm: trajectory too short");
  const int64_t D = cfg.d_model;

  auto obs_emb = ops::Gather(p[ix.emb_obs], traj.obs);
  auto act_emb = ops::Gather(p[ix.emb_act], traj.act);
  auto stream = ops::InterleaveRows(obs_emb, act_emb);  // [2N, D]
  auto xw = ops::AddBias(ops::MatMul(stream, p[ix.lstm_wx]), p[ix.lstm_b]);

  auto h = t.Constant(Tensor<SC>::Zeros({1, D}));
  auto c = t.Constant(Tensor<SC>::Zeros({1, D}));
  std::vector<Var<SC>> action_h;
  for (int64_t step = 0; step < 2 * N; ++step) {
    auto gates = ops::Add(ops::Rows(xw, step, 1), ops::MatMul(h, p[ix.lstm_wh]));
    auto i_g = ops::Sigmoid(ops::Cols(gates, 0, D));
    auto f_g = ops::Sigmoid(ops::Cols(gates, D, D));
    auto g_g = ops::Tanh(ops::Cols(gates, 2 * D, D));
    auto o_g = ops::Sigmoid(ops::Cols(gates, 3 * D, D));
    c = ops::Add(ops::Mul(f_g, c), ops::Mul(i_g, g_g));
    h = ops::Mul(o_g, ops::Tanh(c));
    if (step % 2 == 1) action_h.push_back(h);
  }
  auto H = ops::ConcatRows(action_h);  // [N, D]
  auto logits = ops::AddBias(ops::MatMul(ops::Rows(H, 0, N - 1), p[ix.van_w]),
                             p[ix.van_b]);
  std::vector<int32_t> targets(traj.obs.begin() + 1, traj.obs.end());
  ForwardResult<SC> r;
  r.loss_obs = ops::CrossEntropy(logits, targets);
  r.next_logits = logits;
  r.total = r.loss_obs;
  CountAccuracy(logits.Val(), traj.obs, 1, &r);
  return r;
}

// Bottleneck assignments only: gradient-free trunk + quantization on an
// evaluation tape. Used by map extraction, localization, and metrics.
template <typename SC>
std::vector<std::vector<int32_t>> ComputeCodes(const Model<SC> &m,
                                               const Trajectory &traj) {
  Check(m.cfg.arch == Arch::kTdb, "ComputeCodes: TDB only");
  Tape<SC> t;
  t.training = false;
  auto p = MakeLeaves(t, m.params, /*requires_grad=*/false);
  auto trunk = Trunk(t, m, p, traj);
  Tensor<SC> E = ops::EveryOtherRow(trunk, /*odd=*/false).Val();
  int64_t N = E.rows();
  const int dm = m.cfg.code_dim();
  std::vector<std::vector<int32_t>> codes(static_cast<size_t>(N));
  for (int mi = 0; mi < m.cfg.M; ++mi) {
    Tensor<SC> slice({N, dm});
    for (int64_t i = 0; i < N; ++i)
      std::copy(E.ptr() + i * E.cols() + mi * dm,
                E.ptr() + i * E.cols() + (mi + 1) * dm, slice.ptr() + i * dm);
    const Tensor<SC> &cb = m.params[m.idx.codebooks[static_cast<size_t>(mi)]];
    std::vector<int32_t> ids =
        m.cfg.clone_structured
            ? CloneQuantizeRows(slice, cb, traj.obs, m.partition)
            : QuantizeRows(slice, cb);
    for (int64_t i = 0; i < N; ++i)
      codes[static_cast<size_t>(i)].push_back(ids[static_cast<size_t>(i)]);
  }
  return codes;
}

// Dispatch on architecture.
template <typename SC>
ForwardResult<SC> Forward(Tape<SC> &t, const Model<SC> &m,
                          const std::vector<Var<SC>> &p, const Trajectory &traj,
                          const Model<SC> *teacher = nullptr) {
  switch (m.cfg.arch) {
    case Arch::kTdb: return ForwardTdb(t, m, p, traj, teacher);
    case Arch::kTransformer: return ForwardVanilla(t, m, p, traj);
    case Arch::kLstm: return ForwardLstm(t, m, p, traj);
  }
  Check(false, "Forward: bad arch");
  return {};
}

}  // namespace tdb

#endif  // TDB_MODEL_MODEL_HPP_
