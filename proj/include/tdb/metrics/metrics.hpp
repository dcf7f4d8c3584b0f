// metrics.hpp: evaluation metrics over trained models and extracted graphs.
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

#ifndef TDB_METRICS_METRICS_HPP_
#define TDB_METRICS_METRICS_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "tdb/cogmap/cogmap.hpp"
#include "tdb/trajectory.hpp"
#include "tdb/envs/ginc.hpp"
#include "tdb/model/model.hpp"
#include "tdb/plan/planner.hpp"

namespace tdb {
namespace metrics {

// Next-observation accuracy on held-out walks, counting only predictions
// whose target index is >= burn_in (the prediction of obs[i] for i >= burn_in).
template <typename SC>
double TestAccuracy(const Model<SC> &m,
                    const std::vector<Trajectory> &walks, int64_t burn_in) {
  int64_t correct = 0, total = 0;
  for (const auto &w : walks) {
    Tape<SC> t;
    t.training = false;
    auto p = MakeLeaves(t, m.params, /*requires_grad=*/false);
    auto r = Forward(t, m, p, w);
    const Tensor<SC> &logits = r.next_logits.Val();
    int64_t O = logits.cols();
    for (int64_t i = 0; i < logits.rows(); ++i) {
      if (i + 1 < burn_in) continue;  // row i predicts obs[i+1]
      const SC *row = logits.ptr() + i * O;
      int64_t am = 0;
      for (int64_t c = 1; c < O; ++c)
        if (row[c] > row[am]) am = c;
      correct += am == w.obs[static_cast<size_t>(i + 1)];
      ++total;
    }
  }
  if (total == 0) throw std::invalid_argument("TestAccuracy: no predictions");
  return static_cast<double>(correct) / static_cast<double>(total);
}

// Per-target-index accuracy curve, averaged over walks. All walks must have
// equal length.
template <typename SC>
std::vector<double> AccuracyByTimestep(const Model<SC> &m,
                                       const std::vector<Trajectory> &walks) {
  if (walks.empty())
    throw std::invalid_argument("AccuracyByTimestep: no walks");
  int64_t N = walks[0].length();
  for (const auto &w : walks)
    if (w.length() != N)
      throw std::invalid_argument("AccuracyByTimestep: ragged walk lengths");
  std::vector<int64_t> correct(static_cast<size_t>(N - 1), 0);
  for (const auto &w : walks) {
    Tape<SC> t;
    t.training = false;
    auto p = MakeLeaves(t, m.params, /*requires_grad=*/false);
    auto r = Forward(t, m, p, w);
    const Tensor<SC> &logits = r.next_logits.Val();
    int64_t O = logits.cols();
    for (int64_t i = 0; i < logits.rows(); ++i) {
      const SC *row = logits.ptr() + i * O;
      int64_t am = 0;
      for (int64_t c = 1; c < O; ++c)
        if (row[c] > row[am]) am = c;
      correct[static_cast<size_t>(i)] += am == w.obs[static_cast<size_t>(i + 1)];
    }
  }
  std::vector<double> acc(static_cast<size_t>(N - 1));
  for (size_t i = 0; i < acc.size(); ++i)
    acc[i] = static_cast<double>(correct[i]) / static_cast<double>(walks.size());
  return acc;
}

// Localize every timestep of every walk's code tuples against the graph.
inline std::vector<std::vector<int32_t>> LocalizeWalks(
    const std::vector<std::vector<cogmap::Key>> &assignments,
    const cogmap::LatentGraph &g) {
  std::vector<std::vector<int32_t>> out;
  out.reserve(assignments.size());
  for (const auto &walk : assignments) {
    std::vector<int32_t> nodes;
    nodes.reserve(walk.size());
    for (const auto &key : walk) nodes.push_back(plan::Localize(key, g));
    out.push_back(std::move(nodes));
  }
  return out;
}

// Fraction of consecutive localized-node pairs at graph distance > 1, per
// timestep index. A pair (u, v) teleports when v is neither u itself nor a
// direct successor of u. All walks must have equal length.
inline std::vector<double> TeleportationRate(
    const std::vector<std::vector<int32_t>> &node_seqs,
    const cogmap::LatentGraph &g) {
  if (node_seqs.empty())
    throw std::invalid_argument("TeleportationRate: no sequences");
  size_t N = node_seqs[0].size();
  if (N < 2)
    throw std::invalid_argument("TeleportationRate: sequences too short");
  for (const auto &s : node_seqs)
    if (s.size() != N)
      throw std::invalid_argument("TeleportationRate: ragged lengths");
  std::set<std::pair<int32_t, int32_t>> succ;
  for (const auto &e : g.edges) succ.insert({e.src, e.dst});
  std::vector<double> rate(N - 1, 0.0);
  for (const auto &s : node_seqs)
    for (size_t i = 0; i + 1 < N; ++i) {
      bool adjacent = s[i] == s[i + 1] || succ.count({s[i], s[i + 1]}) > 0;
      rate[i] += adjacent ? 0.0 : 1.0;
    }
  for (auto &r : rate) r /= static_cast<double>(node_seqs.size());
  return rate;
}

struct CodeStats {
  cogmap::Key key;
  int64_t count = 0;
  double mean_timestep = 0.0;
  bool retained = false;  // key owned by a node of the extracted graph
};

// Frequency, mean activation timestep, and retention flag per distinct code
// tuple. Counts sum to the total number of tuples.
inline std::vector<CodeStats> CodeFrequencyStats(
    const std::vector<std::vector<cogmap::Key>> &assignments,
    const cogmap::LatentGraph &g) {
  std::map<cogmap::Key, CodeStats> acc;
  for (const auto &walk : assignments)
    for (size_t t = 0; t < walk.size(); ++t) {
      auto &cs = acc[walk[t]];
      cs.key = walk[t];
      ++cs.count;
      cs.mean_timestep += static_cast<double>(t);
    }
  std::vector<CodeStats> out;
  out.reserve(acc.size());
  for (auto &[key, cs] : acc) {
    cs.mean_timestep /= static_cast<double>(cs.count);
    cs.retained = g.node_of.count(key) > 0;
    out.push_back(std::move(cs));
  }
  return out;
}

// Greedy next-token prediction for a prompt: the prompt tokens are fed as
// observations with a dummy action stream, the target is appended so the
// final logits row exists, and causal masking keeps the target invisible to
// its own prediction.
template <typename SC>
bool PredictsTarget(const Model<SC> &m, const envs::GincPrompt &prompt) {
  Trajectory traj;
  traj.obs = prompt.tokens;
  traj.obs.push_back(prompt.target);
  traj.act.assign(traj.obs.size(), 0);
  if (m.cfg.arch == Arch::kTdb &&
      traj.length() < static_cast<int64_t>(m.cfg.S) + 1)
    throw std::invalid_argument("PredictsTarget: prompt too short for model");
  Tape<SC> t;
  t.training = false;
  auto p = MakeLeaves(t, m.params, /*requires_grad=*/false);
  auto r = Forward(t, m, p, traj);
  const Tensor<SC> &logits = r.next_logits.Val();
  const SC *row = logits.ptr() + (logits.rows() - 1) * logits.cols();
  int64_t am = 0;
  for (int64_t c = 1; c < logits.cols(); ++c)
    if (row[c] > row[am]) am = c;
  return am == prompt.target;
}

struct InContextCell {
  int k = 0, n = 0;
  double accuracy = 0.0;
  int64_t n_prompts = 0;
};

// Accuracy per (k, n) cell over a batch of prompts. Prompts too short for
// the model's multi-step horizon are skipped; cells with no evaluable
// prompts are dropped.
template <typename SC>
std::vector<InContextCell> InContextAccuracy(
    const Model<SC> &m, const std::vector<envs::GincPrompt> &prompts) {
  std::map<std::pair<int, int>, std::pair<int64_t, int64_t>> cells;
  int64_t min_len =
      m.cfg.arch == Arch::kTdb ? static_cast<int64_t>(m.cfg.S) : 1;
  for (const auto &pr : prompts) {
    if (static_cast<int64_t>(pr.tokens.size()) < min_len) continue;
    auto &[correct, total] = cells[{pr.k, pr.n}];
    correct += PredictsTarget(m, pr);
    ++total;
  }
  std::vector<InContextCell> out;
  for (const auto &[kn, ct] : cells)
    out.push_back({kn.first, kn.second,
                   static_cast<double>(ct.first) / static_cast<double>(ct.second),
                   ct.second});
  return out;
}

}  // namespace metrics
}  // namespace tdb

#endif  // TDB_METRICS_METRICS_HPP_
