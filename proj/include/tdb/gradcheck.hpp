// gradcheck.hpp: central finite-difference verification of tape gradients.
//
// GradCheck rebuilds the computation from scratch for every probe, so the
// builder must be a pure function of the input tensors (it is run in eval
// mode with a fixed tape). A determinism pre-check rejects builders whose
// two identical forwards disagree, since finite differences are meaningless
// for them.
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

#ifndef TDB_GRADCHECK_HPP_
#define TDB_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tdb/tape.hpp"

namespace tdb {

// Builds a scalar loss from leaf variables created out of `inputs`.
using GradCheckBuilder =
    std::function<Var<double>(Tape<double> &, const std::vector<Var<double>> &)>;

namespace gradcheck_detail {

inline double Forward(const GradCheckBuilder &build,
                      const std::vector<Tensor<double>> &inputs,
                      std::vector<Tensor<double>> *grads_out) {
  Tape<double> tape;
  tape.training = false;
  std::vector<Var<double>> leaves;
  leaves.reserve(inputs.size());
  for (const auto &x : inputs) leaves.push_back(tape.Leaf(x, true));
  Var<double> loss = build(tape, leaves);
  Check(loss.Val().size() == 1, "GradCheck: builder must return a scalar");
  double value = loss.Val()[0];
  if (grads_out) {
    tape.Backward(loss);
    grads_out->clear();
    for (const auto &leaf : leaves) {
      if (tape.HasGrad(leaf.id)) {
        grads_out->push_back(tape.grad(leaf.id));
      } else {
        grads_out->push_back(Tensor<double>::Zeros(tape.val(leaf.id).shape));
      }
    }
  }
  return value;
}

}  // namespace gradcheck_detail

// Returns the maximum relative error between the tape gradient and a central
// finite difference over every scalar of every input. Relative error uses a
// floored denominator so that near-zero gradients compare absolutely.
inline double GradCheck(const GradCheckBuilder &build,
                        std::vector<Tensor<double>> inputs,
                        double h = 1e-6) {
  double f0 = gradcheck_detail::Forward(build, inputs, nullptr);
  double f0_again = gradcheck_detail::Forward(build, inputs, nullptr);
  Check(f0 == f0_again, "GradCheck: builder is not deterministic");

  std::vector<Tensor<double>> analytic;
  gradcheck_detail::Forward(build, inputs, &analytic);

  double max_rel = 0.0;
  for (size_t t = 0; t < inputs.size(); ++t) {
    Tensor<double> &x = inputs[t];
    for (int64_t i = 0; i < x.size(); ++i) {
      double orig = x[i];
      double step = h * std::max(1.0, std::abs(orig));
      x[i] = orig + step;
      double fp = gradcheck_detail::Forward(build, inputs, nullptr);
      x[i] = orig - step;
      double fm = gradcheck_detail::Forward(build, inputs, nullptr);
      x[i] = orig;
      double numeric = (fp - fm) / (2.0 * step);
      double a = analytic[t][i];
      double denom = std::max({std::abs(a), std::abs(numeric), 1e-2});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace tdb

#endif  // TDB_GRADCHECK_HPP_
