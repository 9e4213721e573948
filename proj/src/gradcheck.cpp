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

#include "segcast/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "segcast/errors.hpp"

namespace segcast {

namespace {
double evaluate(const LossFn& loss, ParameterStore& params) {
  ad::Graph g;
  for (auto& p : params) g.param(p);
  const ad::Var out = loss(g);
  if (out.value().size() != 1) {
    throw UsageError("tensor-autodiff", "gradient check needs a scalar output, got shape " + shape_string(out.shape()));
  }
  return out.item();
}
}  // namespace

GradCheckReport check_gradients(const LossFn& loss, ParameterStore& params, const GradCheckOptions& options) {
  GradCheckReport report;
  params.zero_grad();
  {
    ad::Graph g;
    const ad::Var out = loss(g);
    if (out.value().size() != 1) {
      throw UsageError("tensor-autodiff", "gradient check needs a scalar output, got shape " + shape_string(out.shape()));
    }
    g.backward(out);
  }
  for (auto& p : params) {
    const std::size_t n = options.max_entries_per_param == 0 ? p.value.size()
                                                              : std::min(p.value.size(), options.max_entries_per_param);
    for (std::size_t i = 0; i < n; ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + options.eps;
      const double up = evaluate(loss, params);
      p.value[i] = saved - options.eps;
      const double down = evaluate(loss, params);
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double analytic = p.grad[i];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), options.rel_floor});
      const double rel = std::fabs(analytic - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || report.checked == 1) {
        report.max_rel_error = rel;
        report.worst_param = p.name;
        report.worst_index = i;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace segcast
