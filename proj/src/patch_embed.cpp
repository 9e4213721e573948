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

#include "segcast/patch_embed.hpp"

#include "segcast/errors.hpp"

namespace segcast {

void PatchConfig::validate(std::size_t context_length) const {
  if (granularities.empty()) throw ConfigError("patch-embed", "empty granularity list");
  if (hidden == 0) throw ConfigError("patch-embed", "hidden size must be positive");
  for (std::size_t i = 0; i < granularities.size(); ++i) {
    const std::size_t m = granularities[i];
    if (m == 0) throw ConfigError("patch-embed", "zero granularity");
    if (i > 0 && m <= granularities[i - 1]) throw ConfigError("patch-embed", "granularities must ascend strictly");
    if (region() % m != 0) {
      throw ConfigError("patch-embed", "granularity " + std::to_string(m) + " does not divide region " +
                                           std::to_string(region()));
    }
  }
  if (context_length == 0 || context_length % region() != 0) {
    throw ConfigError("patch-embed", "context length " + std::to_string(context_length) +
                                         " is not a multiple of region " + std::to_string(region()));
  }
}

PatchEmbed::PatchEmbed(PatchConfig cfg, std::size_t context_length, ParameterStore& store, Rng& rng,
                       std::string prefix)
    : cfg_(std::move(cfg)), context_length_(context_length), store_(&store), prefix_(std::move(prefix)) {
  cfg_.validate(context_length_);
  tokens_ = context_length_ / cfg_.region();
  const std::size_t D = cfg_.hidden;
  for (auto m : cfg_.granularities) {
    const std::string base = prefix_ + ".proj." + std::to_string(m);
    store.add_xavier(base + ".w", {D, m}, m, D, rng);
    store.add(base + ".b", Tensor({D}, 0.0));
  }
  store.add_xavier(prefix_ + ".score.w", {cfg_.count(), cfg_.region()}, cfg_.region(), cfg_.count(), rng);
  store.add(prefix_ + ".score.b", Tensor({cfg_.count()}, 0.0));
  store.add_uniform(prefix_ + ".pos", {tokens_, D}, 0.02, rng);
}

PatchEmbedding PatchEmbed::embed(ad::Graph& g, ad::Var context, bool hard_select) const {
  ad::Graph::Scope scope(g, "patch-embed");
  const Shape& s = context.shape();
  if (s.size() != 3 || s[2] != context_length_) {
    throw DimensionError("patch-embed", "expected context [B x C x " + std::to_string(context_length_) + "], got " +
                                            shape_string(s));
  }
  const std::size_t B = s[0], C = s[1], R = cfg_.region(), M = cfg_.count(), D = cfg_.hidden;
  const std::size_t rows = B * C * tokens_;
  const ad::Var regions = ad::reshape(context, {rows, R});

  ad::Var logits = ad::linear(regions, g.param(store_->get(prefix_ + ".score.w")),
                              g.param(store_->get(prefix_ + ".score.b")));
  ad::Var probs = ad::softmax(logits, 1);
  if (hard_select) {
    const auto& P = probs.value();
    Tensor onehot({rows, M}, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t best = 0;
      for (std::size_t m = 1; m < M; ++m) {
        if (P[r * M + m] > P[r * M + best]) best = m;
      }
      onehot[r * M + best] = 1.0;
    }
    probs = g.constant(std::move(onehot));
  }

  ad::Var mixed;
  for (std::size_t i = 0; i < M; ++i) {
    const std::size_t m = cfg_.granularities[i];
    const std::string base = prefix_ + ".proj." + std::to_string(m);
    // Projection is linear, so pooling the patches first equals pooling the projections.
    ad::Var pooled = ad::mean_axis(ad::reshape(regions, {rows, R / m, m}), 1);
    ad::Var cand = ad::linear(pooled, g.param(store_->get(base + ".w")), g.param(store_->get(base + ".b")));
    ad::Var term = ad::mul(ad::slice(probs, 1, i, 1), cand);
    mixed = i == 0 ? term : ad::add(mixed, term);
  }
  ad::Var tokens = ad::reshape(mixed, {B, C, tokens_, D});
  tokens = ad::add(tokens, g.param(store_->get(prefix_ + ".pos")));
  return PatchEmbedding{tokens, PatchSelection{probs, ad::mean_axis(probs, 0)}};
}

ad::Var budget_loss(const PatchSelection& sel, double lambda) {
  ad::Graph& g = *sel.empirical.graph;
  ad::Graph::Scope scope(g, "patch-embed");
  const double uniform = 1.0 / static_cast<double>(sel.empirical.value().size());
  return ad::scale(ad::sum(ad::square(ad::add_scalar(sel.empirical, -uniform))), lambda);
}

}  // namespace segcast
