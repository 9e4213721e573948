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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "segcast/autodiff.hpp"
#include "segcast/config.hpp"
#include "segcast/encoder.hpp"
#include "segcast/exo_vectors.hpp"
#include "segcast/parameters.hpp"
#include "segcast/patch_embed.hpp"
#include "segcast/refine.hpp"
#include "segcast/sage.hpp"

namespace segcast {

// Per (batch, channel) context statistics, each [B x C].
struct NormStats {
  Tensor mean;
  Tensor std;
};

inline constexpr double kNormEps = 1e-8;

// Instance normalization of x [B x C x T]: subtract the mean over T and divide
// by the population std plus kNormEps.
NormStats norm_stats(const Tensor& context);
Tensor normalize(const Tensor& x, const NormStats& stats);
Tensor denormalize(const Tensor& y, const NormStats& stats);

struct Forecast {
  std::vector<ad::Var> raw_segments;  // S_num x [B x C x S_len], before refinement
  std::vector<ad::Var> segments;      // after refinement
  ad::Var prediction;                 // [B x C x H], normalized scale
  std::vector<GateDecision> gates;    // one per segment, empty for linear heads
  PatchSelection selection;
  EncoderState state;
};

struct LossBreakdown {
  double l_pred = 0.0;
  double l_aux = 0.0;
  double l_budget = 0.0;
  double l_reg = 0.0;
  double total = 0.0;
};

// total = ((L_pred + L_aux) + L_budget) + L_reg, L_reg only when enabled.
LossBreakdown total_loss(double l_pred, double l_aux, double l_budget, double l_reg, bool use_reg);

struct LossTerms {
  ad::Var pred;
  ad::Var aux;
  ad::Var budget;
  ad::Var reg;
  ad::Var total;

  LossBreakdown values() const;
};

// The full forecaster: patch embedding, encoder, and per segment an exogenous
// bank plus a prediction head, followed by cross-segment refinement.
class Model {
 public:
  explicit Model(ModelConfig cfg);

  // context: normalized [B x C x T].
  Forecast forward(ad::Graph& g, const Tensor& context, bool hard_select = false) const;
  // target: normalized [B x C x H].
  LossTerms losses(ad::Graph& g, const Forecast& f, const Tensor& target) const;

  // Raw-scale forecast [B x C x H] of a raw context [B x C x T].
  Tensor predict(const Tensor& context) const;
  // Raw-scale full-horizon path of every expert, each [B x C x H]: in every
  // segment the head's candidate for that expert (shared path included),
  // then refinement. A linear head has a single path equal to predict().
  std::vector<Tensor> expert_paths(const Tensor& context) const;
  // Flattened encoder state [(B*C) x (D*P)] of a raw context, without
  // exogenous tokens. This is the input every decoder shares.
  Tensor encode(const Tensor& context) const;

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& params() { return *store_; }
  const ParameterStore& params() const { return *store_; }

 private:
  std::vector<ad::Var> head_inputs(ad::Graph& g, const EncoderState& state) const;
  std::vector<ad::Var> refine(ad::Graph& g, const std::vector<ad::Var>& raw) const;

  ModelConfig cfg_;
  std::unique_ptr<ParameterStore> store_;
  std::optional<PatchEmbed> patch_;
  std::optional<Encoder> encoder_;
  std::optional<ExoBank> exo_;
  std::vector<SageHead> sage_;
  std::vector<LinearHead> linear_;
  std::optional<Scrn> scrn_;
  std::optional<Scad> scad_;
};

// Stacks windows' contexts and targets into [B x C x T] and [B x C x H].
Tensor stack_contexts(const std::vector<const Tensor*>& parts);

}  // namespace segcast
