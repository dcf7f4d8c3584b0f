// probe.hpp: disentanglement probe over bottleneck assignments.
//
// For each bottleneck, a multinomial linear probe (no intercept, no
// regularization) predicts that bottleneck's code from the one-hot
// concatenation of the other bottlenecks' codes. High held-out accuracy means
// the codes are redundant; chance-level accuracy means they are independent.
// The shuffled baseline retrains after independently permuting each
// bottleneck's column, which destroys any cross-bottleneck structure.
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

#ifndef TDB_METRICS_PROBE_HPP_
#define TDB_METRICS_PROBE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tdb/rng.hpp"

namespace tdb {
namespace metrics {

struct ProbeConfig {
  int64_t iters = 5000;
  double lr = 0.001;
  int64_t batch = 32;
  double train_frac = 0.8;
};

struct ProbeResult {
  std::vector<double> accuracy;  // held-out accuracy per bottleneck
  std::vector<double> shuffled;  // same, after column shuffling
  double mean_accuracy = 0.0;
  double mean_shuffled = 0.0;
};

namespace probe_detail {

// Minibatch-SGD multinomial logistic regression with sparse one-hot inputs.
// rows[i] lists the active feature indices of sample i (one per non-target
// bottleneck). Returns held-out accuracy.
inline double TrainEval(const std::vector<std::vector<int32_t>> &rows,
                        const std::vector<int32_t> &labels, int64_t n_features,
                        int64_t n_classes, int64_t n_train,
                        const ProbeConfig &cfg, Rng &rng) {
  std::vector<double> w(static_cast<size_t>(n_features * n_classes), 0.0);
  std::vector<double> logits(static_cast<size_t>(n_classes));
  std::vector<double> grad_row(static_cast<size_t>(n_classes));
  for (int64_t it = 0; it < cfg.iters; ++it) {
    for (int64_t b = 0; b < cfg.batch; ++b) {
      int64_t i = static_cast<int64_t>(rng.UniformInt(static_cast<uint32_t>(n_train)));
      const auto &feats = rows[static_cast<size_t>(i)];
      std::fill(logits.begin(), logits.end(), 0.0);
      for (int32_t f : feats)
        for (int64_t c = 0; c < n_classes; ++c)
          logits[static_cast<size_t>(c)] +=
              w[static_cast<size_t>(f) * n_classes + static_cast<size_t>(c)];
      double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (int64_t c = 0; c < n_classes; ++c) {
        grad_row[static_cast<size_t>(c)] = std::exp(logits[static_cast<size_t>(c)] - mx);
        z += grad_row[static_cast<size_t>(c)];
      }
      for (int64_t c = 0; c < n_classes; ++c)
        grad_row[static_cast<size_t>(c)] /= z;
      grad_row[static_cast<size_t>(labels[static_cast<size_t>(i)])] -= 1.0;
      double step = cfg.lr / static_cast<double>(cfg.batch);
      for (int32_t f : feats)
        for (int64_t c = 0; c < n_classes; ++c)
          w[static_cast<size_t>(f) * n_classes + static_cast<size_t>(c)] -=
              step * grad_row[static_cast<size_t>(c)];
    }
  }
  int64_t correct = 0, total = 0;
  for (size_t i = static_cast<size_t>(n_train); i < rows.size(); ++i) {
    std::fill(logits.begin(), logits.end(), 0.0);
    for (int32_t f : rows[i])
      for (int64_t c = 0; c < n_classes; ++c)
        logits[static_cast<size_t>(c)] +=
            w[static_cast<size_t>(f) * n_classes + static_cast<size_t>(c)];
    int64_t am = 0;
    for (int64_t c = 1; c < n_classes; ++c)
      if (logits[static_cast<size_t>(c)] > logits[static_cast<size_t>(am)]) am = c;
    correct += am == labels[i];
    ++total;
  }
  if (total == 0) throw std::invalid_argument("probe: empty held-out split");
  return static_cast<double>(correct) / static_cast<double>(total);
}

inline double RunOne(const std::vector<std::vector<int32_t>> &tuples,
                     int target, int64_t K, int64_t n_train,
                     const ProbeConfig &cfg, Rng &rng) {
  int M = static_cast<int>(tuples[0].size());
  std::vector<std::vector<int32_t>> rows(tuples.size());
  std::vector<int32_t> labels(tuples.size());
  for (size_t i = 0; i < tuples.size(); ++i) {
    int slot = 0;
    for (int m = 0; m < M; ++m) {
      if (m == target) continue;
      rows[i].push_back(static_cast<int32_t>(slot * K + tuples[i][static_cast<size_t>(m)]));
      ++slot;
    }
    labels[i] = tuples[i][static_cast<size_t>(target)];
  }
  return TrainEval(rows, labels, static_cast<int64_t>(M - 1) * K, K, n_train,
                   cfg, rng);
}

}  // namespace probe_detail

// `assignments` holds one M-tuple of code ids (each in [0, K)) per timestep.
// Requires M >= 2.
inline ProbeResult DisentanglementProbe(
    const std::vector<std::vector<int32_t>> &assignments, int64_t K,
    const ProbeConfig &cfg, Rng &rng) {
  if (assignments.empty())
    throw std::invalid_argument("DisentanglementProbe: no assignments");
  size_t M = assignments[0].size();
  if (M < 2)
    throw std::invalid_argument("DisentanglementProbe: needs M >= 2");
  for (const auto &t : assignments) {
    if (t.size() != M)
      throw std::invalid_argument("DisentanglementProbe: ragged tuples");
    for (int32_t c : t)
      if (c < 0 || c >= K)
        throw std::invalid_argument("DisentanglementProbe: code out of range");
  }

  // Shuffle rows once so the train/held-out split is not order-biased.
  std::vector<std::vector<int32_t>> data = assignments;
  for (size_t i = data.size(); i > 1; --i)
    std::swap(data[i - 1], data[static_cast<size_t>(rng.UniformInt(static_cast<uint32_t>(i)))]);
  int64_t n_train = static_cast<int64_t>(
      cfg.train_frac * static_cast<double>(data.size()));
  if (n_train <= 0 || n_train >= static_cast<int64_t>(data.size()))
    throw std::invalid_argument("DisentanglementProbe: degenerate split");

  // Column-shuffled copy: each bottleneck's codes permuted independently.
  std::vector<std::vector<int32_t>> shuffled = data;
  for (size_t m = 0; m < M; ++m)
    for (size_t i = shuffled.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(rng.UniformInt(static_cast<uint32_t>(i)));
      std::swap(shuffled[i - 1][m], shuffled[j][m]);
    }

  ProbeResult r;
  for (int m = 0; m < static_cast<int>(M); ++m) {
    r.accuracy.push_back(probe_detail::RunOne(data, m, K, n_train, cfg, rng));
    r.shuffled.push_back(
        probe_detail::RunOne(shuffled, m, K, n_train, cfg, rng));
  }
  r.mean_accuracy = std::accumulate(r.accuracy.begin(), r.accuracy.end(), 0.0) /
                    static_cast<double>(M);
  r.mean_shuffled = std::accumulate(r.shuffled.begin(), r.shuffled.end(), 0.0) /
                    static_cast<double>(M);
  return r;
}

}  // namespace metrics
}  // namespace tdb

#endif  // TDB_METRICS_PROBE_HPP_
