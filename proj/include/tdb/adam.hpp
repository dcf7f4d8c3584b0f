// adam.hpp: bias-corrected Adam over a ParamStore.
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

#ifndef TDB_ADAM_HPP_
#define TDB_ADAM_HPP_

#include <cmath>
#include <vector>

#include "tdb/params.hpp"

namespace tdb {

template <typename S>
class Adam {
 public:
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit Adam(double learning_rate = 1e-3) : lr(learning_rate) {}

  int64_t step_count() const { return t_; }

  // grads[i] pairs with params[i]; an empty grad tensor means "no gradient
  // this step" and leaves both the moments and the parameter untouched.
  void Step(ParamStore<S> &params, const std::vector<Tensor<S>> &grads) {
    Check(static_cast<int>(grads.size()) == params.size(), "Adam: grad count");
    if (m_.empty()) {
      for (int p = 0; p < params.size(); ++p) {
        m_.push_back(Tensor<S>::Zeros(params[p].shape));
        v_.push_back(Tensor<S>::Zeros(params[p].shape));
      }
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (int p = 0; p < params.size(); ++p) {
      if (grads[static_cast<size_t>(p)].data.empty()) continue;
      const Tensor<S> &g = grads[static_cast<size_t>(p)];
      Check(g.shape == params[p].shape, "Adam: shape mismatch at " + params.names[p]);
      Tensor<S> &m = m_[static_cast<size_t>(p)];
      Tensor<S> &v = v_[static_cast<size_t>(p)];
      Tensor<S> &w = params[p];
      for (int64_t i = 0; i < g.size(); ++i) {
        double gi = g[i];
        double mi = beta1 * m[i] + (1.0 - beta1) * gi;
        double vi = beta2 * v[i] + (1.0 - beta2) * gi * gi;
        m[i] = static_cast<S>(mi);
        v[i] = static_cast<S>(vi);
        double mhat = mi / bc1;
        double vhat = vi / bc2;
        w[i] = static_cast<S>(w[i] - lr * mhat / (std::sqrt(vhat) + epsilon));
      }
    }
  }

 private:
  std::vector<Tensor<S>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace tdb

#endif  // TDB_ADAM_HPP_
