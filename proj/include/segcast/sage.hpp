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

#include <string>
#include <string_view>
#include <vector>

#include "segcast/autodiff.hpp"
#include "segcast/parameters.hpp"
#include "segcast/rng.hpp"

namespace segcast {

enum class Criterion { kMse, kMae };

Criterion parse_criterion(std::string_view text);
const char* to_string(Criterion c);

struct SageConfig {
  std::size_t experts = 8;
  std::size_t top_k = 4;
  std::size_t seg_len = 48;
  std::size_t input_dim = 0;  // d = D * (P + N_exo)
  double lambda_aux = 0.01;

  void validate() const;
};

// Routing of N instances over E experts.
struct GateDecision {
  ad::Var scores;  // s, [N x E], softmax rows
  ad::Var gate;    // g, [N x E], s on the top-k entries, zero elsewhere
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // N x k, ascending within a row
};

struct ExpertWeights {
  std::vector<ad::Var> w;  // E x [S x d]
  std::vector<ad::Var> b;  // E x [S]
  ad::Var shared_w;        // [S x d]
  ad::Var shared_gate;     // [d]
};

// s = softmax(W_g z), g = top-k mask of s.
GateDecision route(ad::Var z, ad::Var w_gate, std::size_t k);

// y_n = sum_e g_{n,e} (W_e z_n + b_e) + sigmoid(w_s . z_n) W_s z_n.
// Only the retained experts of each instance are evaluated.
ad::Var predict_segment(ad::Var z, const GateDecision& gate, const ExpertWeights& weights);

// lambda * E * sum_e r_e f_e with r_e the mean routing probability and f_e
// the selection frequency over the batch. f_e is a constant for backward.
ad::Var aux_loss(const GateDecision& gate, double lambda);

// Mean over instances of the pointwise criterion over the segment.
ad::Var segment_loss(ad::Var pred, ad::Var target, Criterion criterion);

// One mixture-of-experts head for a single forecast segment.
class SageHead {
 public:
  SageHead(SageConfig cfg, ParameterStore& store, Rng& rng, std::string prefix);

  ExpertWeights bind(ad::Graph& g) const;
  GateDecision route(ad::Graph& g, ad::Var z) const;
  ad::Var predict(ad::Graph& g, ad::Var z, const GateDecision& gate) const;

  // Candidate of every expert with the shared path added, as if the gate put
  // all of its mass on that expert: E tensors of [N x S]. No graph needed.
  std::vector<Tensor> expert_candidates(const Tensor& z) const;

  const SageConfig& config() const { return cfg_; }

 private:
  SageConfig cfg_;
  ParameterStore* store_;
  std::string prefix_;
};

// Plain linear segment head (W z + b); the no-experts baseline.
class LinearHead {
 public:
  LinearHead(std::size_t seg_len, std::size_t input_dim, ParameterStore& store, Rng& rng, std::string prefix);
  ad::Var predict(ad::Graph& g, ad::Var z) const;

 private:
  ParameterStore* store_;
  std::string prefix_;
};

}  // namespace segcast
