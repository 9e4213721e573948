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

#include <doctest.h>

#include "helpers.hpp"
#include "segcast/errors.hpp"
#include "segcast/exo_vectors.hpp"
#include "segcast/sage.hpp"

using namespace segcast;
using segcast::testing::random_tensor;

TEST_CASE("no exogenous vectors is the identity") {
  Rng rng(1);
  ParameterStore store;
  ExoBank bank(3, 0, 4, store, rng);
  CHECK(store.count() == 0);
  ad::Graph g;
  auto h = g.constant(random_tensor({2, 4, 5}, rng));
  CHECK(bank.augment(g, h, 1).id == h.id);
}

TEST_CASE("appending two vectors to eight tokens") {
  Rng rng(2);
  ParameterStore store;
  const std::size_t D = 3, P = 8;
  ExoBank bank(2, 2, D, store, rng);
  CHECK(store.count() == 2);
  for (double v : store.get("lev.1").value.data()) CHECK(std::fabs(v) <= 0.02);
  const Tensor h = random_tensor({4, D, P}, rng);
  ad::Graph g;
  const Tensor out = bank.augment(g, g.constant(h), 1).value();
  REQUIRE(out.shape() == Shape{4, D, P + 2});
  CHECK(out.size() / 4 == 10 * D);
  const auto& v = store.get("lev.1").value;
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t p = 0; p < P; ++p) CHECK(out[(n * D + d) * 10 + p] == h[(n * D + d) * P + p]);
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK(out[(n * D + d) * 10 + P + j] == v[j * D + d]);
        CHECK(out[(n * D + d) * 10 + P + j] == out[d * 10 + P + j]);
      }
    }
}

TEST_CASE("unknown segment is a configuration error") {
  Rng rng(3);
  ParameterStore store;
  ExoBank bank(2, 1, 3, store, rng);
  ad::Graph g;
  CHECK_THROWS_AS(bank.augment(g, g.constant(Tensor({1, 3, 2})), 2), ConfigError);
  CHECK_THROWS_AS(augment(g.constant(Tensor({1, 4, 2})), g.constant(Tensor({1, 3}))), DimensionError);
}

TEST_CASE("exogenous vectors receive gradient") {
  Rng rng(4);
  ParameterStore store;
  const std::size_t D = 3, P = 4, n_exo = 2, S = 5;
  ExoBank bank(1, n_exo, D, store, rng);
  SageHead head(SageConfig{3, 2, S, D * (P + n_exo), 0.01}, store, rng, "h");
  const Tensor h = random_tensor({2, D, P}, rng), y = random_tensor({2, S}, rng);
  ad::Graph g;
  auto aug = bank.augment(g, g.constant(h), 0);
  auto z = ad::reshape(aug, {2, D * (P + n_exo)});
  auto gate = head.route(g, z);
  store.zero_grad();
  g.backward(ad::add(segment_loss(head.predict(g, z, gate), g.constant(y), Criterion::kMse), aux_loss(gate, 0.01)));
  double norm = 0.0;
  for (double v : store.get("lev.0").grad.data()) norm += v * v;
  CHECK(norm > 0.0);
}

TEST_CASE("zero bank with zero head columns reproduces the model without exogenous vectors") {
  Rng rng(5);
  const std::size_t D = 3, P = 4, n_exo = 2, S = 4, E = 3, N = 3;
  const std::size_t d0 = D * P, d1 = D * (P + n_exo);
  ParameterStore plain, extended;
  SageHead h0(SageConfig{E, 2, S, d0, 0.01}, plain, rng, "h");
  SageHead h1(SageConfig{E, 2, S, d1, 0.01}, extended, rng, "h");
  ExoBank bank(1, n_exo, D, extended, rng);
  extended.get("lev.0").value.fill(0.0);
  // Copy every [rows x d0] weight into [rows x d1], zero on the appended token columns.
  for (const auto& p : plain) {
    Parameter& q = extended.get(p.name);
    if (p.value.rank() == 1 && p.value.dim(0) != d0) {
      q.value = p.value;
      continue;
    }
    const std::size_t rows = p.value.size() / d0;
    q.value.fill(0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t dd = 0; dd < D; ++dd)
        for (std::size_t t = 0; t < P; ++t) q.value[r * d1 + dd * (P + n_exo) + t] = p.value[r * d0 + dd * P + t];
  }
  const Tensor h = random_tensor({N, D, P}, rng);
  ad::Graph g;
  auto z0 = ad::reshape(g.constant(h), {N, d0});
  auto z1 = ad::reshape(bank.augment(g, g.constant(h), 0), {N, d1});
  auto g0 = h0.route(g, z0);
  auto g1 = h1.route(g, z1);
  CHECK(g0.scores.value() == g1.scores.value());
  CHECK(h0.predict(g, z0, g0).value() == h1.predict(g, z1, g1).value());
}
