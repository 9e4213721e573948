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

#include "segcast/exo_vectors.hpp"

#include "segcast/errors.hpp"

namespace segcast {

ad::Var augment(ad::Var h, ad::Var bank) {
  ad::Graph& g = *h.graph;
  ad::Graph::Scope scope(g, "exo-vectors");
  const Shape& s = h.shape();
  if (s.size() != 3 || bank.value().rank() != 2 || bank.dim(1) != s[1]) {
    throw DimensionError("exo-vectors", "cannot append bank " + shape_string(bank.shape()) + " to " +
                                            shape_string(s));
  }
  const std::size_t N = s[0], D = s[1], n_exo = bank.dim(0);
  const ad::Var columns = ad::permute(bank, {1, 0});  // [D x N_exo]
  const ad::Var tiled = ad::broadcast_to(ad::reshape(columns, {1, D, n_exo}), {N, D, n_exo});
  const ad::Var parts[] = {h, tiled};
  return ad::concat(parts, 2);
}

ExoBank::ExoBank(std::size_t segments, std::size_t count, std::size_t hidden, ParameterStore& store, Rng& rng,
                 std::string prefix)
    : segments_(segments), count_(count), hidden_(hidden), store_(&store), prefix_(std::move(prefix)) {
  if (count_ == 0) return;
  for (std::size_t k = 0; k < segments_; ++k) store.add_uniform(name(k), {count_, hidden_}, 0.02, rng);
}

ad::Var ExoBank::augment(ad::Graph& g, ad::Var h, std::size_t segment) const {
  if (segment >= segments_) {
    throw ConfigError("exo-vectors", "no exogenous bank for segment " + std::to_string(segment) + " (have " +
                                         std::to_string(segments_) + ")");
  }
  if (count_ == 0) return h;
  return segcast::augment(h, g.param(store_->get(name(segment))));
}

}  // namespace segcast
