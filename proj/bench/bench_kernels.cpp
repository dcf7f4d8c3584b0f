// Benchmarks the OpenMP kernels against the serial reference build and
// verifies bit-identical outputs on the way.
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

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "tdb/kernels.hpp"
#include "tdb/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

template <typename Fn>
double TimeBest(Fn &&fn, int reps) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    fn();
    auto t1 = Clock::now();
    best = std::min(best, Seconds(t0, t1));
  }
  return best;
}

void BenchOne(const char *name,
              void (*serial)(const float *, const float *, float *, int64_t,
                             int64_t, int64_t, bool),
              void (*parallel)(const float *, const float *, float *, int64_t,
                               int64_t, int64_t, bool),
              int64_t m, int64_t n, int64_t k) {
  tdb::Rng rng(1234);
  std::vector<float> a(static_cast<size_t>(m * k)), b(static_cast<size_t>(k * n));
  std::vector<float> c_s(static_cast<size_t>(m * n)), c_p(c_s.size());
  for (auto &x : a) x = static_cast<float>(rng.UniformDouble() - 0.5);
  for (auto &x : b) x = static_cast<float>(rng.UniformDouble() - 0.5);

  serial(a.data(), b.data(), c_s.data(), m, n, k, false);
  parallel(a.data(), b.data(), c_p.data(), m, n, k, false);
  bool identical =
      std::memcmp(c_s.data(), c_p.data(), sizeof(float) * c_s.size()) == 0;

  double ts = TimeBest([&] { serial(a.data(), b.data(), c_s.data(), m, n, k, false); }, 5);
  double tp = TimeBest([&] { parallel(a.data(), b.data(), c_p.data(), m, n, k, false); }, 5);
  double gflop = 2.0 * static_cast<double>(m) * static_cast<double>(n) *
                 static_cast<double>(k) / 1e9;
  std::printf("%-10s %4lldx%-4lldx%-4lld serial %7.2f GF/s  omp %7.2f GF/s  speedup %5.2fx  bitwise %s\n",
              name, static_cast<long long>(m), static_cast<long long>(n),
              static_cast<long long>(k), gflop / ts, gflop / tp, ts / tp,
              identical ? "equal" : "DIFFER");
}

}  // namespace

int main() {
  for (int64_t size : {128, 256, 512}) {
    BenchOne("MatMulNN", tdb::kernels::serial::MatMulNN<float>,
             tdb::kernels::MatMulNN<float>, size, size, size);
    BenchOne("MatMulNT", tdb::kernels::serial::MatMulNT<float>,
             tdb::kernels::MatMulNT<float>, size, size, size);
    BenchOne("MatMulTN", tdb::kernels::serial::MatMulTN<float>,
             tdb::kernels::MatMulTN<float>, size, size, size);
  }
  return 0;
}
