// kernels.hpp: the dense inner loops everything else is built on.
//
// Every kernel exists twice: a serial reference under kernels::serial and an
// OpenMP build under kernels::. The parallel builds split work across output
// rows only, so each output element is accumulated in the same order as the
// serial build and the results are bit-identical for any thread count. Tests
// in tests/test_kernels.cpp compare the two; bench/bench_kernels.cpp times
// them against each other.
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

#ifndef TDB_KERNELS_HPP_
#define TDB_KERNELS_HPP_

#include <cstdint>
#include <cstring>

namespace tdb {
namespace kernels {

namespace detail {

// The row routines must compile to exactly one body per instantiation:
// inlining or IPA-cloning them into the serial and OpenMP wrappers separately
// would let the compiler pick different vectorization (and thus summation
// order) per call site, breaking the bit-identity contract between the two
// builds. noipa also stops GCC from constant-propagating `accumulate` into
// per-call-site clones.
#if defined(__GNUC__) && !defined(__clang__)
#define TDB_NOINLINE __attribute__((noipa))
#elif defined(__clang__)
#define TDB_NOINLINE __attribute__((noinline))
#else
#define TDB_NOINLINE
#endif

// C[i,:] (+)= sum_k A[i,k] * B[k,:]
template <typename S>
TDB_NOINLINE void RowNN(const S *a_row, const S *b, S *c_row, int64_t n, int64_t k,
                  bool accumulate) {
  if (!accumulate) std::memset(c_row, 0, sizeof(S) * static_cast<size_t>(n));
  for (int64_t kk = 0; kk < k; ++kk) {
    S aik = a_row[kk];
    const S *b_row = b + kk * n;
#pragma omp simd
    for (int64_t j = 0; j < n; ++j) c_row[j] += aik * b_row[j];
  }
}

// C[i,j] (+)= sum_k A[i,k] * B[j,k]
template <typename S>
TDB_NOINLINE void RowNT(const S *a_row, const S *b, S *c_row, int64_t n, int64_t k,
                  bool accumulate) {
  for (int64_t j = 0; j < n; ++j) {
    const S *b_row = b + j * k;
    S acc = 0;
#pragma omp simd reduction(+ : acc)
    for (int64_t kk = 0; kk < k; ++kk) acc += a_row[kk] * b_row[kk];
    c_row[j] = accumulate ? c_row[j] + acc : acc;
  }
}

// C[i,:] (+)= sum_k A[k,i] * B[k,:]   (A is k x m, we emit row i of C)
template <typename S>
TDB_NOINLINE void RowTN(const S *a, const S *b, S *c_row, int64_t i, int64_t m,
                  int64_t n, int64_t k, bool accumulate) {
  if (!accumulate) std::memset(c_row, 0, sizeof(S) * static_cast<size_t>(n));
  for (int64_t kk = 0; kk < k; ++kk) {
    S aki = a[kk * m + i];
    const S *b_row = b + kk * n;
#pragma omp simd
    for (int64_t j = 0; j < n; ++j) c_row[j] += aki * b_row[j];
  }
}

}  // namespace detail

namespace serial {

// C[m,n] = A[m,k] @ B[k,n]
template <typename S>
void MatMulNN(const S *a, const S *b, S *c, int64_t m, int64_t n, int64_t k,
              bool accumulate = false) {
  for (int64_t i = 0; i < m; ++i)
    detail::RowNN(a + i * k, b, c + i * n, n, k, accumulate);
}

// C[m,n] = A[m,k] @ B[n,k]^T
template <typename S>
void MatMulNT(const S *a, const S *b, S *c, int64_t m, int64_t n, int64_t k,
              bool accumulate = false) {
  for (int64_t i = 0; i < m; ++i)
    detail::RowNT(a + i * k, b, c + i * n, n, k, accumulate);
}

// C[m,n] = A[k,m]^T @ B[k,n]
template <typename S>
void MatMulTN(const S *a, const S *b, S *c, int64_t m, int64_t n, int64_t k,
              bool accumulate = false) {
  for (int64_t i = 0; i < m; ++i)
    detail::RowTN(a, b, c + i * n, i, m, n, k, accumulate);
}

template <typename S>
void Axpy(S alpha, const S *x, S *y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace serial

template <typename S>
void MatMulNN(const S *a, const S *b, S *c, int64_t m, int64_t n, int64_t k,
              bool accumulate = false) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i)
    detail::RowNN(a + i * k, b, c + i * n, n, k, accumulate);
}

template <typename S>
void MatMulNT(const S *a, const S *b, S *c, int64_t m, int64_t n, int64_t k,
              bool accumulate = false) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i)
    detail::RowNT(a + i * k, b, c + i * n, n, k, accumulate);
}

template <typename S>
void MatMulTN(const S *a, const S *b, S *c, int64_t m, int64_t n, int64_t k,
              bool accumulate = false) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i)
    detail::RowTN(a, b, c + i * n, i, m, n, k, accumulate);
}

template <typename S>
void Axpy(S alpha, const S *x, S *y, int64_t n) {
#pragma omp simd
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace kernels
}  // namespace tdb

#endif  // TDB_KERNELS_HPP_
