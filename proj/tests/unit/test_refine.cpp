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

#include <cmath>

#include "helpers.hpp"
#include "segcast/errors.hpp"
#include "segcast/gradcheck.hpp"
#include "segcast/refine.hpp"

using namespace segcast;
using segcast::testing::random_tensor;

namespace {

std::vector<ad::Var> constants(ad::Graph& g, const std::vector<Tensor>& ts) {
  std::vector<ad::Var> out;
  for (const auto& t : ts) out.push_back(g.constant(t));
  return out;
}

std::vector<Tensor> values(const std::vector<ad::Var>& vs) {
  std::vector<Tensor> out;
  for (const auto& v : vs) out.push_back(v.value());
  return out;
}

std::vector<Tensor> random_segments(std::size_t count, const Shape& shape, Rng& rng) {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_tensor(shape, rng));
  return out;
}

}  // namespace

TEST_CASE("refine mode names") {
  CHECK(parse_refine_mode("none") == RefineMode::kNone);
  CHECK(parse_refine_mode("scrn") == RefineMode::kScrn);
  CHECK(parse_refine_mode("scad") == RefineMode::kScad);
  CHECK(std::string(to_string(RefineMode::kScad)) == "scad");
  CHECK_THROWS_AS(parse_refine_mode("film"), ConfigError);
}

TEST_CASE("scrn hand example") {
  ad::Graph g;
  const std::vector<ad::Var> segs{g.constant(Tensor({1, 1, 2}, {1.0, 1.0})), g.constant(Tensor({1, 1, 2}, {2.0, 2.0}))};
  const std::vector<ad::Var> emb{g.constant(Tensor({2}, {0.5, -0.5}))};
  const auto out = scrn_refine(segs, emb, g.constant(Tensor::scalar(0.1)));
  CHECK(out[0].value() == segs[0].value());
  CHECK(out[1].value() == Tensor({1, 1, 2}, {2.0 + 0.1 * 0.5, 2.0 - 0.1 * 0.5}));
  CHECK(std::fabs(out[1].value()[0] - 2.05) < 1e-15);
  CHECK(std::fabs(out[1].value()[1] - 1.95) < 1e-15);
}

TEST_CASE("scrn with alpha zero or one segment is the identity") {
  Rng rng(1);
  ParameterStore store;
  Scrn scrn(4, 3, 0.0, store, rng);
  const auto raw = random_segments(4, {2, 2, 3}, rng);
  ad::Graph g;
  const auto out = values(scrn.refine(g, constants(g, raw)));
  for (std::size_t s = 0; s < 4; ++s) CHECK(out[s] == raw[s]);

  ParameterStore one;
  Scrn single(1, 3, 0.5, one, rng);
  const auto lone = values(single.refine(g, constants(g, {raw[0]})));
  CHECK(lone[0] == raw[0]);
}

TEST_CASE("scrn initialization") {
  Rng rng(2);
  ParameterStore store;
  Scrn scrn(3, 48, 0.01, store, rng);
  CHECK(store.contains("scrn.e.1"));
  CHECK(store.contains("scrn.e.2"));
  CHECK_FALSE(store.contains("scrn.e.0"));
  CHECK(store.get("scrn.alpha").value.item() == 0.01);
  const double bound = std::sqrt(6.0 / 48.0) * 0.01;
  for (double v : store.get("scrn.e.2").value.data()) CHECK(std::fabs(v) <= bound);
}

TEST_CASE("scrn perturbation reaches exactly the segment and its successor") {
  Rng rng(3);
  ParameterStore store;
  const std::size_t K = 5;
  Scrn scrn(K, 4, 0.3, store, rng);
  const auto raw = random_segments(K, {2, 1, 4}, rng);
  ad::Graph g;
  const auto base = values(scrn.refine(g, constants(g, raw)));
  for (std::size_t s = 0; s < K; ++s) {
    auto bumped = raw;
    for (auto& v : bumped[s].data()) v += 0.5;
    const auto out = values(scrn.refine(g, constants(g, bumped)));
    for (std::size_t j = 0; j < K; ++j) {
      CAPTURE(s);
      CAPTURE(j);
      if (j == s || j == s + 1) CHECK_FALSE(out[j] == base[j]);
      else CHECK(out[j] == base[j]);
    }
  }
}

TEST_CASE("scrn is linear in the segments") {
  Rng rng(4);
  ParameterStore store;
  Scrn scrn(3, 4, 0.7, store, rng);
  const auto raw = random_segments(3, {1, 2, 4}, rng);
  auto scaled = raw;
  const double a = -2.5;
  for (auto& t : scaled)
    for (auto& v : t.data()) v *= a;
  ad::Graph g;
  const auto y = values(scrn.refine(g, constants(g, raw)));
  const auto ys = values(scrn.refine(g, constants(g, scaled)));
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t i = 0; i < y[s].size(); ++i) CHECK(ys[s][i] == doctest::Approx(a * y[s][i]).epsilon(1e-14));
}

TEST_CASE("scrn reg examples") {
  ad::Graph g;
  const std::vector<ad::Var> zero{g.constant(Tensor({3}, 0.0))};
  CHECK(scrn_reg(g, zero, 1.0).item() == 0.0);
  const std::vector<ad::Var> one{g.constant(Tensor({2}, {3.0, 4.0}))};
  CHECK(scrn_reg(g, one, 1.0).item() == 12.5);
  CHECK(scrn_reg(g, one, 0.0).item() == 0.0);
  const std::vector<ad::Var> two{g.constant(Tensor({2}, {1.0, 0.0})), g.constant(Tensor({2}, {0.0, 1.0}))};
  CHECK(scrn_reg(g, two, 2.0).item() == 1.0);
  CHECK(scrn_reg(g, {}, 1.0).item() == 0.0);

  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const std::vector<ad::Var> e{g.constant(random_tensor({4}, rng))};
    CHECK(scrn_reg(g, e, 1e-4).item() > 0.0);
  }
}

TEST_CASE("scrn shape mismatch") {
  ad::Graph g;
  const std::vector<ad::Var> segs{g.constant(Tensor({1, 1, 2})), g.constant(Tensor({1, 1, 3}))};
  const std::vector<ad::Var> emb{g.constant(Tensor({2}))};
  CHECK_THROWS_AS(scrn_refine(segs, emb, g.constant(Tensor::scalar(0.1))), DimensionError);
}

TEST_CASE("scad with zero output projection is the identity") {
  Rng rng(6);
  ParameterStore store;
  Scad scad(3, 4, 6, 2, store, rng);
  for (std::size_t s = 1; s < 3; ++s) store.get(scad.param_name(s, "wo")).value.fill(0.0);
  const auto raw = random_segments(3, {2, 1, 4}, rng);
  ad::Graph g;
  const auto out = values(scad.refine(g, constants(g, raw)));
  for (std::size_t s = 0; s < 3; ++s) CHECK(out[s] == raw[s]);
}

TEST_CASE("scad single segment and causality") {
  Rng rng(7);
  ParameterStore one;
  Scad single(1, 4, 4, 2, one, rng);
  ad::Graph g;
  const auto lone = random_segments(1, {1, 1, 4}, rng);
  CHECK(values(single.refine(g, constants(g, lone)))[0] == lone[0]);

  ParameterStore store;
  const std::size_t K = 4;
  Scad scad(K, 4, 4, 2, store, rng);
  for (std::size_t s = 1; s < K; ++s) store.get(scad.param_name(s, "bo")).value[0] = 0.1;
  const auto raw = random_segments(K, {2, 1, 4}, rng);
  const auto base = values(scad.refine(g, constants(g, raw)));
  for (std::size_t s = 0; s < K; ++s) {
    auto bumped = raw;
    for (auto& v : bumped[s].data()) v += 0.5;
    const auto out = values(scad.refine(g, constants(g, bumped)));
    for (std::size_t j = 0; j < s; ++j) CHECK(out[j] == base[j]);
    CHECK_FALSE(out[s] == base[s]);
    for (std::size_t j = s + 2; j < K; ++j) CHECK(out[j] == base[j]);
  }
}

TEST_CASE("refinement gradients match finite differences") {
  Rng rng(8);
  ParameterStore store;
  Scrn scrn(3, 4, 0.2, store, rng, "scrn");
  Scad scad(3, 4, 4, 2, store, rng, "scad");
  const auto raw = random_segments(3, {2, 1, 4}, rng);
  const Tensor w = random_tensor({2, 1, 4}, rng);
  const auto report = check_gradients(
      [&](ad::Graph& g) {
        const auto segs = constants(g, raw);
        const auto a = scrn.refine(g, segs);
        const auto b = scad.refine(g, segs);
        ad::Var total = scrn.reg(g, 0.5);
        for (std::size_t s = 0; s < 3; ++s) {
          total = ad::add(total, ad::sum(ad::mul(ad::square(a[s]), g.constant(w))));
          total = ad::add(total, ad::sum(ad::mul(ad::tanh(b[s]), g.constant(w))));
        }
        return total;
      },
      store);
  CHECK(report.max_rel_error < 1e-5);
}
