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
#include <vector>

#include "segcast/autodiff.hpp"
#include "segcast/parameters.hpp"
#include "segcast/rng.hpp"

namespace segcast {

struct PatchConfig {
  // Ascending patch lengths; the largest one is the region length.
  std::vector<std::size_t> granularities{8, 16, 32, 64};
  std::size_t hidden = 64;

  std::size_t region() const { return granularities.empty() ? 0 : granularities.back(); }
  std::size_t count() const { return granularities.size(); }
  // Throws ConfigError unless every granularity divides the region and the
  // context length is a multiple of the region.
  void validate(std::size_t context_length) const;
};

struct PatchSelection {
  ad::Var probs;      // [(B*C*regions) x M], rows sum to 1
  ad::Var empirical;  // [M], mean of probs rows
};

struct PatchEmbedding {
  ad::Var tokens;  // [B x C x P x D]
  PatchSelection selection;
};

// Multi-granularity embedding of a normalized context. Each region of length
// max(granularities) is embedded once per granularity (patches of that length
// projected to D and mean-pooled); a linear scorer on the raw region gives a
// softmax over granularities and the token is the probability-weighted sum of
// the candidates. A learned positional vector is added per token index.
class PatchEmbed {
 public:
  PatchEmbed(PatchConfig cfg, std::size_t context_length, ParameterStore& store, Rng& rng,
             std::string prefix = "patch");

  // context: [B x C x T]. With hard_select the argmax granularity is used
  // (probabilities become one-hot constants).
  PatchEmbedding embed(ad::Graph& g, ad::Var context, bool hard_select = false) const;

  const PatchConfig& config() const { return cfg_; }
  std::size_t tokens() const { return tokens_; }

 private:
  PatchConfig cfg_;
  std::size_t context_length_;
  std::size_t tokens_;
  ParameterStore* store_;
  std::string prefix_;
};

// lambda * sum_m (p_m - 1/M)^2
ad::Var budget_loss(const PatchSelection& sel, double lambda);

}  // namespace segcast
