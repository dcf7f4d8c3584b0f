// rng.hpp
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

#ifndef TDB_RNG_HPP_
#define TDB_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace tdb {

// PCG32 (Melissa O'Neill's minimal variant). We carry our own generator so
// that identical seeds produce identical streams on every platform; the
// distributions in <random> do not give that guarantee.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0) { Reseed(seed, stream); }

  void Reseed(uint64_t seed, uint64_t stream = 0) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    NextU32();
    state_ += seed;
    NextU32();
  }

  uint32_t NextU32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31));
  }

  uint64_t NextU64() {
    uint64_t hi = NextU32();
    return (hi << 32) | NextU32();
  }

  // Uniform in [0, n). Rejection sampling keeps the draw unbiased.
  uint32_t UniformInt(uint32_t n) {
    uint32_t threshold = (-n) % n;
    for (;;) {
      uint32_t r = NextU32();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform in [0, 1) with 53 usable bits.
  double UniformDouble() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  // Box-Muller; caches the second variate.
  double Normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1, u2;
    do {
      u1 = UniformDouble();
    } while (u1 <= 0.0);
    u2 = UniformDouble();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  // Normal truncated to [-2, 2] standard deviations, then scaled.
  double TruncatedNormal(double stddev) {
    for (;;) {
      double z = Normal();
      if (z >= -2.0 && z <= 2.0) return z * stddev;
    }
  }

  // Derives an independent stream for a sub-task. Splitting is ad hoc but
  // deterministic: the child stream id is mixed into both seed and stream.
  Rng Split(uint64_t key) {
    uint64_t s = NextU64();
    return Rng(s ^ (key * 0x9E3779B97F4A7C15ULL), key + 1);
  }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 1;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace tdb

#endif  // TDB_RNG_HPP_
