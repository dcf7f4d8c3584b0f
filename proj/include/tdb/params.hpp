// params.hpp: named parameter registry shared by the optimizer, the EMA
// teacher and the checkpoint format.
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

#ifndef TDB_PARAMS_HPP_
#define TDB_PARAMS_HPP_

#include <string>
#include <vector>

#include "tdb/rng.hpp"
#include "tdb/tensor.hpp"

namespace tdb {

template <typename S>
struct ParamStore {
  std::vector<std::string> names;
  std::vector<Tensor<S>> values;

  int Add(const std::string &name, Tensor<S> value) {
    names.push_back(name);
    values.push_back(std::move(value));
    return static_cast<int>(values.size()) - 1;
  }

  // Truncated normal init, the transformer default for embeddings and
  // projections.
  int AddInit(const std::string &name, Shape shape, Rng &rng, double stddev = 0.02) {
    Tensor<S> v(shape);
    for (int64_t i = 0; i < v.size(); ++i)
      v[i] = static_cast<S>(rng.TruncatedNormal(stddev));
    return Add(name, std::move(v));
  }

  int AddZeros(const std::string &name, Shape shape) {
    return Add(name, Tensor<S>::Zeros(std::move(shape)));
  }

  int AddOnes(const std::string &name, Shape shape) {
    return Add(name, Tensor<S>::Full(std::move(shape), S(1)));
  }

  int size() const { return static_cast<int>(values.size()); }
  Tensor<S> &operator[](int i) { return values[static_cast<size_t>(i)]; }
  const Tensor<S> &operator[](int i) const { return values[static_cast<size_t>(i)]; }

  int Find(const std::string &name) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }

  int64_t TotalScalars() const {
    int64_t n = 0;
    for (const auto &v : values) n += v.size();
    return n;
  }

  template <typename T>
  ParamStore<T> Cast() const {
    ParamStore<T> out;
    out.names = names;
    for (const auto &v : values) out.values.push_back(v.template Cast<T>());
    return out;
  }
};

// teacher <- alpha * teacher + (1 - alpha) * student, elementwise.
template <typename S>
void EmaUpdate(ParamStore<S> &teacher, const ParamStore<S> &student, double alpha) {
  Check(teacher.size() == student.size(), "EmaUpdate: store size mismatch");
  S a = static_cast<S>(alpha), b = static_cast<S>(1.0 - alpha);
  for (int p = 0; p < teacher.size(); ++p) {
    Tensor<S> &tv = teacher[p];
    const Tensor<S> &sv = student[p];
    Check(tv.shape == sv.shape, "EmaUpdate: shape mismatch at " + teacher.names[p]);
    for (int64_t i = 0; i < tv.size(); ++i) tv[i] = a * tv[i] + b * sv[i];
  }
}

}  // namespace tdb

#endif  // TDB_PARAMS_HPP_
