// Per-op correctness and finite-difference gradient checks for the tape.
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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "tdb/gradcheck.hpp"
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

constexpr double kTol = 1e-5;

}  // namespace

TEST_CASE("gelu pinned values") {
  Tape<double> tape;
  Tensor<double> x({3});
  x[0] = 0.0;
  x[1] = 10.0;
  x[2] = 1.0;
  auto y = ops::Gelu(tape.Constant(x));
  CHECK(y.Val()[0] == 0.0);
  CHECK(y.Val()[1] == doctest::Approx(10.0).epsilon(1e-7));
  CHECK(y.Val()[2] == doctest::Approx(0.8413447461).epsilon(1e-9));
}

TEST_CASE("gelu rejects non-finite input") {
  Tape<double> tape;
  Tensor<double> x({2});
  x[1] = std::nan("");
  CHECK_THROWS(ops::Gelu(tape.Constant(x)));
}

TEST_CASE("stop_gradient identity forward, zero backward") {
  Tape<double> tape;
  Tensor<double> x = RandomTensor({4, 3}, 11);
  auto xv = tape.Leaf(x, true);
  auto sg = ops::StopGradient(xv);
  for (int64_t i = 0; i < x.size(); ++i) CHECK(sg.Val()[i] == x[i]);
  tape.Backward(ops::Sum(sg));
  CHECK(!tape.HasGrad(xv.id));
}

TEST_CASE("stop_gradient: d/dx sum(x*sg(x)) at (2,3) is (2,3)") {
  Tape<double> tape;
  Tensor<double> x({1, 2});
  x[0] = 2.0;
  x[1] = 3.0;
  auto xv = tape.Leaf(x, true);
  tape.Backward(ops::Sum(ops::Mul(xv, ops::StopGradient(xv))));
  CHECK(tape.grad(xv.id)[0] == 2.0);
  CHECK(tape.grad(xv.id)[1] == 3.0);
}

TEST_CASE("grad_check constant function returns 0") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    auto c = t.Constant(Tensor<double>::Full({1}, 5.0));
    return ops::Add(ops::Scale(ops::Sum(in[0]), 0.0), c);
  };
  CHECK(tdb::GradCheck(build, {RandomTensor({3}, 1)}) == 0.0);
}

TEST_CASE("gradcheck matmul add sub mul scale") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    auto prod = ops::MatMul(in[0], in[1]);
    auto mixed = ops::Mul(ops::Sub(prod, in[2]), ops::Add(prod, in[2]));
    return ops::Sum(ops::Scale(mixed, 0.7));
  };
  double err = tdb::GradCheck(
      build, {RandomTensor({3, 4}, 2), RandomTensor({4, 5}, 3), RandomTensor({3, 5}, 4)});
  CHECK(err < kTol);
}

TEST_CASE("gradcheck addbias gelu sigmoid tanh") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    auto h = ops::Gelu(ops::AddBias(in[0], in[1]));
    return ops::Sum(ops::Add(ops::Sigmoid(h), ops::Tanh(h)));
  };
  double err = tdb::GradCheck(build, {RandomTensor({5, 3}, 5), RandomTensor({3}, 6)});
  CHECK(err < kTol);
}

TEST_CASE("gradcheck layernorm softmax") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    auto y = ops::LayerNorm(in[0], in[1], in[2]);
    return ops::Sum(ops::Mul(ops::Softmax(y), in[3]));
  };
  double err = tdb::GradCheck(build, {RandomTensor({4, 6}, 7), RandomTensor({6}, 8),
                                      RandomTensor({6}, 9), RandomTensor({4, 6}, 10)});
  CHECK(err < kTol);
}

TEST_CASE("layernorm forward: rows have mean 0 and variance 1 pre gamma/beta") {
  Tape<double> tape;
  Tensor<double> x = RandomTensor({3, 8}, 12, 2.0);
  auto y = ops::LayerNorm(tape.Constant(x), tape.Constant(Tensor<double>::Full({8}, 1.0)),
                          tape.Constant(Tensor<double>::Zeros({8})));
  for (int64_t r = 0; r < 3; ++r) {
    double mean = 0, var = 0;
    for (int64_t c = 0; c < 8; ++c) mean += y.Val()[r * 8 + c];
    mean /= 8;
    for (int64_t c = 0; c < 8; ++c) {
      double d = y.Val()[r * 8 + c] - mean;
      var += d * d;
    }
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(var / 8 == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("softmax rows sum to one") {
  Tape<double> tape;
  auto y = ops::Softmax(tape.Constant(RandomTensor({5, 7}, 13, 5.0)));
  for (int64_t r = 0; r < 5; ++r) {
    double s = 0;
    for (int64_t c = 0; c < 7; ++c) s += y.Val()[r * 7 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gradcheck gather") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    auto rows = ops::Gather(in[0], {2, 0, 2, 1});
    return ops::Sum(ops::Mul(rows, rows));
  };
  CHECK(tdb::GradCheck(build, {RandomTensor({3, 4}, 14)}) < kTol);
}

TEST_CASE("gather bounds checked") {
  Tape<double> tape;
  auto tbl = tape.Constant(RandomTensor({3, 2}, 15));
  CHECK_THROWS(ops::Gather(tbl, {0, 3}));
  CHECK_THROWS(ops::Gather(tbl, {-1}));
}

TEST_CASE("gradcheck rows cols concat slices") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    auto left = ops::Cols(in[0], 0, 2);
    auto right = ops::Cols(in[0], 2, 3);
    auto cat = ops::ConcatCols(std::vector<Var<double>>{right, in[1], left});
    auto mid = ops::Rows(cat, 1, 2);
    return ops::Sum(ops::Mul(mid, mid));
  };
  CHECK(tdb::GradCheck(build, {RandomTensor({4, 5}, 16), RandomTensor({4, 2}, 17)}) < kTol);
}

TEST_CASE("gradcheck interleave and every-other-row") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    auto inter = ops::InterleaveRows(in[0], in[1]);
    auto odd = ops::EveryOtherRow(inter, true);
    auto even = ops::EveryOtherRow(inter, false);
    return ops::Add(ops::Sum(ops::Mul(odd, odd)), ops::Sum(ops::Gelu(even)));
  };
  CHECK(tdb::GradCheck(build, {RandomTensor({3, 4}, 18), RandomTensor({3, 4}, 19)}) < kTol);
}

TEST_CASE("interleave forward ordering") {
  Tape<double> tape;
  Tensor<double> a({2, 1}), b({2, 1});
  a[0] = 1;
  a[1] = 3;
  b[0] = 2;
  b[1] = 4;
  auto y = ops::InterleaveRows(tape.Constant(a), tape.Constant(b));
  for (int i = 0; i < 4; ++i) CHECK(y.Val()[i] == 1.0 + i);
}

TEST_CASE("gradcheck l2 normalize rows") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    return ops::Sum(ops::Mul(ops::L2NormalizeRows(in[0]), in[1]));
  };
  CHECK(tdb::GradCheck(build, {RandomTensor({3, 5}, 20), RandomTensor({3, 5}, 21)}) < kTol);
}

TEST_CASE("gradcheck straight-through passes decoder grad to encoder") {
  // Forward uses the quantized tensor; backward must treat the op as identity
  // on the encoder input.
  Tensor<double> quantized = RandomTensor({2, 3}, 22);
  auto build = [&](Tape<double> &t, const std::vector<Var<double>> &in) {
    auto st = ops::StraightThrough(in[0], quantized);
    return ops::Sum(ops::Mul(st, t.Constant(RandomTensor({2, 3}, 23))));
  };
  Tape<double> tape;
  Tensor<double> enc = RandomTensor({2, 3}, 24);
  auto ev = tape.Leaf(enc, true);
  auto st = ops::StraightThrough(ev, quantized);
  for (int64_t i = 0; i < quantized.size(); ++i) CHECK(st.Val()[i] == quantized[i]);
  Tensor<double> w = RandomTensor({2, 3}, 23);
  tape.Backward(ops::Sum(ops::Mul(st, tape.Constant(w))));
  for (int64_t i = 0; i < w.size(); ++i)
    CHECK(tape.grad(ev.id)[i] == doctest::Approx(w[i]).epsilon(1e-12));
}

TEST_CASE("gradcheck squared error and weighted sum") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    auto a = ops::SquaredError(in[0], in[1]);
    auto b = ops::SquaredError(in[0], in[1], /*mean_over_rows=*/true);
    return ops::WeightedSum(std::vector<Var<double>>{a, b}, {0.3, 1.7});
  };
  CHECK(tdb::GradCheck(build, {RandomTensor({4, 3}, 25), RandomTensor({4, 3}, 26)}) < kTol);
}

TEST_CASE("gradcheck cross entropy") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    return ops::CrossEntropy(ops::Scale(in[0], 3.0), {1, 0, 4, 2});
  };
  CHECK(tdb::GradCheck(build, {RandomTensor({4, 5}, 27)}) < kTol);
}

TEST_CASE("cross entropy of uniform logits is log(C)") {
  Tape<double> tape;
  auto loss = ops::CrossEntropy(tape.Constant(Tensor<double>::Zeros({3, 8})), {0, 5, 7});
  CHECK(loss.Val()[0] == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("gradcheck mean and sum") {
  auto build = [](Tape<double> &t, const std::vector<Var<double>> &in) {
    return ops::Add(ops::Mean(ops::Mul(in[0], in[0])), ops::Sum(in[0]));
  };
  CHECK(tdb::GradCheck(build, {RandomTensor({2, 6}, 28)}) < kTol);
}

TEST_CASE("dropout eval mode is exact identity; train mode scales") {
  Tape<double> tape;
  tape.training = false;
  Tensor<double> x = RandomTensor({4, 4}, 29);
  auto xv = tape.Leaf(x, true);
  auto y = ops::Dropout(xv, 0.5);
  CHECK(y.id == xv.id);

  Tape<double> train_tape;
  tdb::Rng rng(30);
  train_tape.rng = &rng;
  auto tv = train_tape.Leaf(x, true);
  auto ty = ops::Dropout(tv, 0.5);
  int kept = 0;
  for (int64_t i = 0; i < x.size(); ++i) {
    if (ty.Val()[i] != 0.0) {
      CHECK(ty.Val()[i] == doctest::Approx(x[i] * 2.0).epsilon(1e-12));
      ++kept;
    }
  }
  CHECK(kept > 0);
  CHECK(kept < x.size());
}

TEST_CASE("gradient of node consumed twice is the sum of both contributions") {
  Tape<double> tape;
  Tensor<double> x({1});
  x[0] = 3.0;
  auto xv = tape.Leaf(x, true);
  // y = x*x + 2x  =>  dy/dx = 2x + 2 = 8
  tape.Backward(ops::Sum(ops::Add(ops::Mul(xv, xv), ops::Scale(xv, 2.0))));
  CHECK(tape.grad(xv.id)[0] == doctest::Approx(8.0).epsilon(1e-12));
}
