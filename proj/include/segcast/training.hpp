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

#include <iosfwd>
#include <string>
#include <vector>

#include "segcast/dataset.hpp"
#include "segcast/model.hpp"
#include "segcast/parameters.hpp"

namespace segcast {

// Adam with bias correction. Moments are kept per parameter in store order.
class Adam {
 public:
  explicit Adam(ParameterStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Applies one update from the accumulated gradients. Throws NumericError
  // naming the first parameter whose gradient is not finite.
  void step();
  std::size_t steps() const { return t_; }

 private:
  ParameterStore* store_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// Header of the per-step metrics CSV.
inline constexpr const char* kMetricsHeader = "step,L_pred,L_aux,L_budget,L_reg,total";
void write_metrics_row(std::ostream& os, std::size_t step, const LossBreakdown& b);

struct TrainResult {
  std::vector<LossBreakdown> history;
  std::size_t steps = 0;
};

// Mini-batch Adam over the windows for cfg.epochs epochs (or cfg.max_steps
// updates when non-zero). Batch order is reshuffled each epoch from the config
// seed. Contexts and targets are normalized by the context statistics; the
// loss is computed on that scale. When metrics is non-null the CSV header and
// one row per step are written to it.
TrainResult train(Model& model, const std::vector<Window>& windows, std::ostream* metrics = nullptr);

// Batch of windows as ([B x C x T], [B x C x H]) tensors.
std::pair<Tensor, Tensor> make_batch(const std::vector<Window>& windows, const std::vector<std::size_t>& ids);

}  // namespace segcast
