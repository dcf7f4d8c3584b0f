// RNG determinism, Adam pinned behavior, EMA updates, checkpoint round trip.
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
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "tdb/adam.hpp"
#include "tdb/checkpoint.hpp"
#include "tdb/params.hpp"
#include "tdb/rng.hpp"

TEST_CASE("rng: same seed gives identical streams, split streams differ") {
  tdb::Rng a(1234), b(1234), c(1235);
  bool all_equal = true, any_equal_c = true;
  for (int i = 0; i < 256; ++i) {
    uint32_t x = a.NextU32();
    if (x != b.NextU32()) all_equal = false;
    if (x != c.NextU32()) any_equal_c = false;
  }
  CHECK(all_equal);
  CHECK(!any_equal_c);

  tdb::Rng base(77);
  tdb::Rng s1 = base.Split(1);
  tdb::Rng s2 = base.Split(2);
  CHECK(s1.NextU32() != s2.NextU32());
}

TEST_CASE("rng: uniform int in range, truncated normal within 2 sigma") {
  tdb::Rng rng(9);
  for (int i = 0; i < 1000; ++i) CHECK(rng.UniformInt(7) < 7u);
  for (int i = 0; i < 1000; ++i) {
    double z = rng.TruncatedNormal(0.02);
    CHECK(std::abs(z) <= 0.04);
  }
}

TEST_CASE("adam: zero grad with fresh state leaves params unchanged") {
  tdb::ParamStore<double> params;
  tdb::Rng rng(3);
  params.AddInit("w", {4, 4}, rng);
  tdb::Tensor<double> before = params[0];
  tdb::Adam<double> opt;
  opt.Step(params, {tdb::Tensor<double>::Zeros({4, 4})});
  for (int64_t i = 0; i < before.size(); ++i) CHECK(params[0][i] == before[i]);
}

TEST_CASE("adam: first step on scalar g=0.5 moves by about -lr") {
  tdb::ParamStore<double> params;
  params.AddZeros("w", {1});
  params[0][0] = 1.0;
  tdb::Adam<double> opt;  // lr = 1e-3
  opt.Step(params, {tdb::Tensor<double>::Full({1}, 0.5)});
  // Bias correction makes m_hat = g and v_hat = g^2, so the update is
  // lr * g / (|g| + eps) which is lr up to eps.
  CHECK(params[0][0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
}

TEST_CASE("adam: deterministic across repeated runs") {
  auto run = [] {
    tdb::ParamStore<double> params;
    tdb::Rng rng(8);
    params.AddInit("w", {3, 3}, rng);
    tdb::Adam<double> opt;
    for (int step = 0; step < 10; ++step) {
      tdb::Tensor<double> g({3, 3});
      for (int64_t i = 0; i < 9; ++i)
        g[i] = std::sin(static_cast<double>(step * 9 + i));
      opt.Step(params, {g});
    }
    return params[0];
  };
  tdb::Tensor<double> a = run(), b = run();
  for (int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("adam: shape mismatch rejected") {
  tdb::ParamStore<double> params;
  params.AddZeros("w", {2, 2});
  tdb::Adam<double> opt;
  CHECK_THROWS(opt.Step(params, {tdb::Tensor<double>::Zeros({3})}));
}

TEST_CASE("ema update is a convex combination") {
  tdb::ParamStore<double> teacher, student;
  teacher.Add("w", tdb::Tensor<double>::Full({2}, 1.0));
  student.Add("w", tdb::Tensor<double>::Full({2}, 2.0));
  tdb::EmaUpdate(teacher, student, 0.99);
  CHECK(teacher[0][0] == doctest::Approx(0.99 * 1.0 + 0.01 * 2.0).epsilon(1e-15));
}

TEST_CASE("checkpoint round trip is bit exact") {
  tdb::ParamStore<float> params;
  tdb::Rng rng(21);
  params.AddInit("layer0/weight", {7, 5}, rng);
  params.AddInit("layer0/bias", {5}, rng);
  params.AddInit("codebook", {16, 8}, rng, 1.0);
  const std::string path = "ckpt_roundtrip_test.bin";
  tdb::SaveCheckpoint(path, params);
  tdb::ParamStore<float> loaded = tdb::LoadCheckpoint<float>(path);
  std::remove(path.c_str());
  REQUIRE(loaded.size() == params.size());
  for (int p = 0; p < params.size(); ++p) {
    CHECK(loaded.names[static_cast<size_t>(p)] == params.names[static_cast<size_t>(p)]);
    REQUIRE(loaded[p].shape == params[p].shape);
    for (int64_t i = 0; i < params[p].size(); ++i) CHECK(loaded[p][i] == params[p][i]);
  }
}

TEST_CASE("checkpoint load rejects bad magic and wrong width") {
  const std::string path = "ckpt_bad_test.bin";
  {
    std::FILE *f = std::fopen(path.c_str(), "wb");
    std::fwrite("NOPE", 1, 4, f);
    std::fclose(f);
  }
  CHECK_THROWS(tdb::LoadCheckpoint<float>(path));
  tdb::ParamStore<float> params;
  params.AddZeros("w", {2});
  tdb::SaveCheckpoint(path, params);
  CHECK_THROWS(tdb::LoadCheckpoint<double>(path));
  std::remove(path.c_str());
}
