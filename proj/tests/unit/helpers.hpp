// Copyright 2026 The segcast Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <functional>

#include "segcast/autodiff.hpp"
#include "segcast/rng.hpp"
#include "segcast/tensor.hpp"

namespace segcast::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Central differences of a scalar function, written independently of the
// library's gradient checker.
inline Tensor numeric_grad(const std::function<double(const Tensor&)>& f, Tensor x, double eps = 1e-5) {
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f(x);
    x[i] = keep - eps;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

inline double max_rel_error(const Tensor& a, const Tensor& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), floor});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
  }
  return worst;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  return worst;
}

// Analytic gradient of a scalar graph function with respect to one input.
inline Tensor analytic_grad(const std::function<ad::Var(ad::Graph&, ad::Var)>& f, const Tensor& x) {
  ad::Graph g;
  ad::Var v = g.variable(x);
  g.backward(f(g, v));
  return g.grad(v);
}

inline double eval_scalar(const std::function<ad::Var(ad::Graph&, ad::Var)>& f, const Tensor& x) {
  ad::Graph g;
  return f(g, g.constant(x)).item();
}

}  // namespace segcast::testing
