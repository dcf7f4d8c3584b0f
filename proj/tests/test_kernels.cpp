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

#include <cstring>
#include <vector>

#include "doctest.h"
#include "tdb/kernels.hpp"
#include "tdb/rng.hpp"

namespace {

template <typename S>
std::vector<S> RandomVec(int64_t n, tdb::Rng &rng) {
  std::vector<S> v(static_cast<size_t>(n));
  for (auto &x : v) x = static_cast<S>(rng.UniformDouble() * 2.0 - 1.0);
  return v;
}

template <typename S>
void CheckAllVariants(int64_t m, int64_t n, int64_t k) {
  tdb::Rng rng(7u + static_cast<uint64_t>(m * 131 + n * 17 + k));
  auto a_nn = RandomVec<S>(m * k, rng);
  auto b_nn = RandomVec<S>(k * n, rng);
  auto b_nt = RandomVec<S>(n * k, rng);
  auto a_tn = RandomVec<S>(k * m, rng);
  std::vector<S> cs(static_cast<size_t>(m * n)), cp(cs.size());

  for (bool accumulate : {false, true}) {
    auto seed = RandomVec<S>(m * n, rng);
    cs = seed;
    cp = seed;
    tdb::kernels::serial::MatMulNN(a_nn.data(), b_nn.data(), cs.data(), m, n, k, accumulate);
    tdb::kernels::MatMulNN(a_nn.data(), b_nn.data(), cp.data(), m, n, k, accumulate);
    CHECK(std::memcmp(cs.data(), cp.data(), sizeof(S) * cs.size()) == 0);

    cs = seed;
    cp = seed;
    tdb::kernels::serial::MatMulNT(a_nn.data(), b_nt.data(), cs.data(), m, n, k, accumulate);
    tdb::kernels::MatMulNT(a_nn.data(), b_nt.data(), cp.data(), m, n, k, accumulate);
    CHECK(std::memcmp(cs.data(), cp.data(), sizeof(S) * cs.size()) == 0);

    cs = seed;
    cp = seed;
    tdb::kernels::serial::MatMulTN(a_tn.data(), b_nn.data(), cs.data(), m, n, k, accumulate);
    tdb::kernels::MatMulTN(a_tn.data(), b_nn.data(), cp.data(), m, n, k, accumulate);
    CHECK(std::memcmp(cs.data(), cp.data(), sizeof(S) * cs.size()) == 0);
  }
}

}  // namespace

TEST_CASE("omp kernels match serial reference bitwise") {
  CheckAllVariants<float>(1, 1, 1);
  CheckAllVariants<float>(3, 5, 7);
  CheckAllVariants<float>(17, 9, 33);
  CheckAllVariants<float>(64, 64, 64);
  CheckAllVariants<double>(3, 5, 7);
  CheckAllVariants<double>(31, 13, 29);
}

TEST_CASE("matmul values against hand computation") {
  // A = [[1,2],[3,4]], B = [[5,6],[7,8]]
  float a[4] = {1, 2, 3, 4}, b[4] = {5, 6, 7, 8}, c[4];
  tdb::kernels::serial::MatMulNN(a, b, c, 2, 2, 2);
  CHECK(c[0] == 19.0f);
  CHECK(c[1] == 22.0f);
  CHECK(c[2] == 43.0f);
  CHECK(c[3] == 50.0f);
  // A @ B^T: row i of A dot row j of B.
  tdb::kernels::serial::MatMulNT(a, b, c, 2, 2, 2);
  CHECK(c[0] == 17.0f);
  CHECK(c[1] == 23.0f);
  CHECK(c[2] == 39.0f);
  CHECK(c[3] == 53.0f);
  // A^T @ B with A stored k x m.
  tdb::kernels::serial::MatMulTN(a, b, c, 2, 2, 2);
  CHECK(c[0] == 26.0f);
  CHECK(c[1] == 30.0f);
  CHECK(c[2] == 38.0f);
  CHECK(c[3] == 44.0f);
}

TEST_CASE("axpy matches serial") {
  tdb::Rng rng(99);
  auto x = RandomVec<float>(257, rng);
  auto y1 = RandomVec<float>(257, rng);
  auto y2 = y1;
  tdb::kernels::serial::Axpy(0.37f, x.data(), y1.data(), 257);
  tdb::kernels::Axpy(0.37f, x.data(), y2.data(), 257);
  CHECK(std::memcmp(y1.data(), y2.data(), sizeof(float) * y1.size()) == 0);
}
