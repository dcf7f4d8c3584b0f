// tensor.hpp: dense row-major multi-dimensional array of real scalars.
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

#ifndef TDB_TENSOR_HPP_
#define TDB_TENSOR_HPP_

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdb {

using Shape = std::vector<int64_t>;

inline int64_t NumElements(const Shape &shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

inline std::string ShapeStr(const Shape &shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

// Training runs in 32-bit, gradient verification in 64-bit; everything that
// touches scalars is templated on S in {float, double}.
template <typename S>
struct Tensor {
  Shape shape;
  std::vector<S> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(NumElements(shape), S(0)) {}
  Tensor(Shape s, S fill) : shape(std::move(s)), data(NumElements(shape), fill) {}

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  S *ptr() { return data.data(); }
  const S *ptr() const { return data.data(); }
  S &operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  S operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  int64_t dim(int i) const {
    if (i < 0) i += static_cast<int>(shape.size());
    return shape[static_cast<size_t>(i)];
  }
  int ndim() const { return static_cast<int>(shape.size()); }

  // Rows/cols of a matrix view: all leading dims collapsed against the last.
  int64_t rows() const { return shape.empty() ? 1 : size() / shape.back(); }
  int64_t cols() const { return shape.empty() ? size() : shape.back(); }

  bool AllFinite() const {
    for (S v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  int64_t FirstNonFinite() const {
    for (int64_t i = 0; i < size(); ++i)
      if (!std::isfinite(static_cast<double>(data[static_cast<size_t>(i)]))) return i;
    return -1;
  }

  template <typename T>
  Tensor<T> Cast() const {
    Tensor<T> out(shape);
    for (int64_t i = 0; i < size(); ++i)
      out[i] = static_cast<T>(data[static_cast<size_t>(i)]);
    return out;
  }

  static Tensor Zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor Full(Shape s, S v) { return Tensor(std::move(s), v); }
};

inline void Check(bool cond, const std::string &msg) {
  if (!cond) throw std::runtime_error(msg);
}

}  // namespace tdb

#endif  // TDB_TENSOR_HPP_
