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
#include <optional>
#include <string>
#include <vector>

#include "segcast/config.hpp"
#include "segcast/dataset.hpp"
#include "segcast/model.hpp"
#include "segcast/synth.hpp"

namespace segcast {

struct HorizonMetrics {
  std::size_t horizon = 0;  // leading steps scored
  double mse = 0.0;
  double mae = 0.0;
};

struct EvalResult {
  Tensor predictions;  // raw scale, [N x C x H]
  std::vector<HorizonMetrics> horizons;
  std::optional<ModeMetrics> modes;
};

// Horizon prefixes reported by evaluate(): the usual 96/192/336/720 that are
// shorter than H, then H itself.
std::vector<std::size_t> horizon_prefixes(std::size_t horizon);

// Scores the model on raw-scale windows. When every window carries a mode
// label, mode metrics are added (each channel of a window is one instance);
// the conditional-mean gap needs the generating mixture.
EvalResult evaluate(const Model& model, const std::vector<Window>& windows, const MixtureSpec* mixture = nullptr,
                    std::size_t batch = 64);

// Columns: window,channel,step,value
void write_predictions_csv(const Tensor& predictions, std::ostream& os);

struct AblationRow {
  std::string name;
  ModelConfig config;
  double mse = 0.0;
  double mae = 0.0;
  double final_loss = 0.0;
  std::size_t steps = 0;
  bool finite = false;
};

// The five ablation variants derived from a base config: baseline (linear
// head, no exogenous vectors, no refinement), +LEV, +LEV+SAGE, +SCRN, +SCAD.
std::vector<std::pair<std::string, ModelConfig>> ablation_configs(const ModelConfig& base);

// Trains every variant on the first train_fraction of the windows and scores
// it on the rest.
std::vector<AblationRow> run_ablation(const ModelConfig& base, const std::vector<Window>& windows,
                                      double train_fraction = 0.8);

// Columns: config,mse,mae,final_loss,steps
void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& os);

}  // namespace segcast
