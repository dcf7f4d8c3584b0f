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

#include <vector>

#include "doctest.h"
#include "tdb/gradcheck.hpp"
#include "tdb/model/attention.hpp"
#include "tdb/rng.hpp"
#include "tdb/tape.hpp"

using tdb::Shape;
using tdb::Tape;
using tdb::Tensor;
using tdb::Var;
namespace ops = tdb::ops;

namespace {

Tensor<double> RandomTensor(Shape shape, uint64_t seed, double scale = 1.0) {
  tdb::Rng rng(seed);
  Tensor<double> t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i)
    t[i] = scale * (rng.UniformDouble() * 2.0 - 1.0);
  return t;
}

}  // namespace

TEST_CASE("relative attention gradcheck") {
  const int T = 5, D = 8, H = 2, dh = D / H;
  auto build = [&](Tape<double> &t, const std::vector<Var<double>> &in) {
    auto y = ops::RelCausalAttention(in[0], in[1], in[2], in[3], in[4], in[5], H);
    auto w = t.Constant(RandomTensor({T, D}, 40));
    return ops::Sum(ops::Mul(y, w));
  };
  double err = tdb::GradCheck(
      build, {RandomTensor({T, D}, 41), RandomTensor({T, D}, 42),
              RandomTensor({T, D}, 43), RandomTensor({T, dh}, 44),
              RandomTensor({dh}, 45, 0.2), RandomTensor({dh}, 46, 0.2)});
  CHECK(err < 1e-5);
}

TEST_CASE("attention is causal: future keys/values do not affect past outputs") {
  const int T = 6, D = 4, H = 2;
  Tensor<double> q = RandomTensor({T, D}, 50);
  Tensor<double> k = RandomTensor({T, D}, 51);
  Tensor<double> v = RandomTensor({T, D}, 52);
  Tensor<double> rel = RandomTensor({T, D / H}, 53);
  Tensor<double> ub = RandomTensor({D / H}, 54, 0.2);
  Tensor<double> vb = RandomTensor({D / H}, 55, 0.2);

  auto run = [&](const Tensor<double> &kk, const Tensor<double> &vv) {
    Tape<double> tape;
    auto y = ops::RelCausalAttention(tape.Constant(q), tape.Constant(kk),
                                     tape.Constant(vv), tape.Constant(rel),
                                     tape.Constant(ub), tape.Constant(vb), H);
    return y.Val();
  };

  Tensor<double> base = run(k, v);
  Tensor<double> k2 = k, v2 = v;
  // Perturb everything at positions >= 3.
  for (int64_t t = 3; t < T; ++t)
    for (int64_t d = 0; d < D; ++d) {
      k2[t * D + d] += 10.0;
      v2[t * D + d] -= 7.0;
    }
  Tensor<double> moved = run(k2, v2);
  for (int64_t t = 0; t < 3; ++t)
    for (int64_t d = 0; d < D; ++d)
      CHECK(base[t * D + d] == moved[t * D + d]);
  bool any_change = false;
  for (int64_t t = 3; t < T; ++t)
    for (int64_t d = 0; d < D; ++d)
      if (base[t * D + d] != moved[t * D + d]) any_change = true;
  CHECK(any_change);
}

TEST_CASE("single position attends only to itself") {
  // With T=1 the softmax is a single 1.0 and output equals v.
  const int D = 6, H = 3;
  Tensor<double> q = RandomTensor({1, D}, 60);
  Tensor<double> k = RandomTensor({1, D}, 61);
  Tensor<double> v = RandomTensor({1, D}, 62);
  Tape<double> tape;
  auto y = ops::RelCausalAttention(
      tape.Constant(q), tape.Constant(k), tape.Constant(v),
      tape.Constant(RandomTensor({1, D / H}, 63)),
      tape.Constant(RandomTensor({D / H}, 64)),
      tape.Constant(RandomTensor({D / H}, 65)), H);
  for (int64_t d = 0; d < D; ++d)
    CHECK(y.Val()[d] == doctest::Approx(v[d]).epsilon(1e-12));
}
