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

#include <functional>
#include <string>

#include "segcast/autodiff.hpp"
#include "segcast/parameters.hpp"

namespace segcast {

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool passed(double tol) const { return max_rel_error < tol; }
};

struct GradCheckOptions {
  double eps = 1e-5;
  // Denominator floor of the relative error, so that entries whose true
  // gradient is zero are judged by absolute error instead.
  double rel_floor = 1e-6;
  // 0 checks every entry of every parameter.
  std::size_t max_entries_per_param = 0;
};

using LossFn = std::function<ad::Var(ad::Graph&)>;

// Compares the analytic gradient of a scalar loss with central differences
// (f(theta + eps) - f(theta - eps)) / (2 eps) for every parameter entry.
// Relative error is |a - n| / max(|a|, |n|, rel_floor).
GradCheckReport check_gradients(const LossFn& loss, ParameterStore& params, const GradCheckOptions& options = {});

}  // namespace segcast
