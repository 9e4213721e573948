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
#include <numeric>
#include <sstream>

#include "helpers.hpp"
#include "segcast/errors.hpp"
#include "segcast/gradcheck.hpp"
#include "segcast/parameters.hpp"

using namespace segcast;
using segcast::testing::analytic_grad;
using segcast::testing::eval_scalar;
using segcast::testing::max_rel_error;
using segcast::testing::numeric_grad;
using segcast::testing::random_tensor;

TEST_CASE("tensor rejects inconsistent shapes") {
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 0}), DimensionError);
  Tensor t({2, 3}, 0.0);
  t.at({1, 2}) = 5.0;
  CHECK(t[5] == 5.0);
  CHECK_THROWS(t.at({2, 0}));
}

TEST_CASE("matmul examples") {
  ad::Graph g;
  auto I = g.constant(Tensor::from_rows({{1, 0}, {0, 1}}));
  auto A = g.constant(Tensor::from_rows({{1, 2}, {3, 4}}));
  CHECK(ad::matmul(I, A).value() == A.value());

  auto P = g.constant(Tensor::from_rows({{1, 0}, {0, 0}}));
  auto B = g.constant(Tensor::from_rows({{5, 6}, {7, 8}}));
  CHECK(ad::matmul(P, B).value() == Tensor::from_rows({{5, 6}, {0, 0}}));

  CHECK_THROWS_AS(ad::matmul(A, g.constant(Tensor({3, 2}))), DimensionError);
}

TEST_CASE("gradient of sum(A B) with respect to A is ones B^T") {
  Rng rng(1);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
  ad::Graph g;
  auto A = g.variable(a), B = g.variable(b);
  g.backward(ad::sum(ad::matmul(A, B)));
  const Tensor ga = g.grad(A);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      double expect = 0.0;
      for (std::size_t j = 0; j < 2; ++j) expect += b[k * 2 + j];
      CHECK(ga[i * 4 + k] == doctest::Approx(expect).epsilon(1e-14));
    }
  const Tensor fd = numeric_grad(
      [&](const Tensor& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
          for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 4; ++k) s += x[i * 4 + k] * b[k * 2 + j];
        return s;
      },
      a);
  CHECK(max_rel_error(ga, fd) < 1e-6);
}

TEST_CASE("softmax examples") {
  ad::Graph g;
  auto u = ad::softmax(g.constant(Tensor({4}, 0.0)), 0);
  for (double v : u.value().data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  auto s = ad::softmax(g.constant(Tensor({3}, {std::log(1.0), std::log(2.0), std::log(3.0)})), 0);
  CHECK(s.value()[0] == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(s.value()[1] == doctest::Approx(2.0 / 6).epsilon(1e-14));
  CHECK(s.value()[2] == doctest::Approx(3.0 / 6).epsilon(1e-14));

  auto big = ad::softmax(g.constant(Tensor({2}, {1000.0, 0.0})), 0);
  CHECK(big.value()[0] == 1.0);
  CHECK(big.value()[1] >= 0.0);
  CHECK(big.value()[1] < 1e-300);

  CHECK_THROWS(ad::softmax(g.constant(Tensor({2, 2})), 2));
}

TEST_CASE("softmax rows sum to one for random inputs") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng.below(5), cols = 1 + rng.below(9);
    ad::Graph g;
    auto s = ad::softmax(g.constant(random_tensor({rows, cols}, rng, -50.0, 50.0)), 1);
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double v = s.value()[r * cols + c];
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        total += v;
      }
      CHECK(std::fabs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("sigmoid values and gradient") {
  ad::Graph g;
  CHECK(ad::sigmoid(g.constant(Tensor::scalar(0.0))).item() == 0.5);
  const double tiny = ad::sigmoid(g.constant(Tensor::scalar(-800.0))).item();
  CHECK(tiny >= 0.0);
  CHECK(tiny < 1e-300);

  Rng rng(3);
  const Tensor x = random_tensor({7}, rng, -4.0, 4.0);
  const Tensor ga = analytic_grad([](ad::Graph&, ad::Var v) { return ad::sum(ad::sigmoid(v)); }, x);
  Tensor expect(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-x[i]));
    expect[i] = s * (1.0 - s);
  }
  CHECK(max_rel_error(ga, expect) < 1e-12);
  const Tensor fd = numeric_grad(
      [](const Tensor& t) {
        double s = 0.0;
        for (double v : t.data()) s += 1.0 / (1.0 + std::exp(-v));
        return s;
      },
      x);
  CHECK(max_rel_error(ga, fd) < 1e-6);
}

TEST_CASE("topk_mask examples") {
  ad::Graph g;
  auto s = g.constant(Tensor::from_rows({{0.5, 0.3, 0.2}}));
  CHECK(ad::topk_mask(s, 3).gate.value() == s.value());
  auto k1 = ad::topk_mask(s, 1);
  CHECK(k1.gate.value() == Tensor::from_rows({{0.5, 0.0, 0.0}}));
  CHECK(k1.indices == std::vector<std::size_t>{0});

  auto tie = ad::topk_mask(g.constant(Tensor::from_rows({{0.4, 0.4, 0.2}})), 1);
  CHECK(tie.gate.value() == Tensor::from_rows({{0.4, 0.0, 0.0}}));

  CHECK_THROWS_AS(ad::topk_mask(s, 0), ParameterError);
  CHECK_THROWS_AS(ad::topk_mask(s, 4), ParameterError);
}

TEST_CASE("topk_mask keeps exactly k unchanged entries and routes gradient only through them") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t N = 1 + rng.below(4), E = 1 + rng.below(8), k = 1 + rng.below(E);
    const Tensor x = random_tensor({N, E}, rng);
    ad::Graph g;
    auto v = g.variable(x);
    auto tk = ad::topk_mask(v, k);
    Tensor w = random_tensor({N, E}, rng);
    g.backward(ad::sum(ad::mul(tk.gate, g.constant(w))));
    const Tensor grad = g.grad(v);
    for (std::size_t n = 0; n < N; ++n) {
      std::size_t kept = 0;
      // Independent oracle: entry kept iff fewer than k entries beat it,
      // counting equal entries at lower indices as beating it.
      for (std::size_t e = 0; e < E; ++e) {
        std::size_t better = 0;
        for (std::size_t o = 0; o < E; ++o) {
          const double a = x[n * E + o], b = x[n * E + e];
          if (a > b || (a == b && o < e)) ++better;
        }
        const bool keep = better < k;
        const double gv = tk.gate.value()[n * E + e];
        if (keep) {
          ++kept;
          CHECK(gv == x[n * E + e]);
          CHECK(grad[n * E + e] == w[n * E + e]);
        } else {
          CHECK(gv == 0.0);
          CHECK(grad[n * E + e] == 0.0);
        }
      }
      CHECK(kept == k);
    }
  }
}

TEST_CASE("check_gradients on a quadratic") {
  ParameterStore store;
  store.add("w", Tensor({2}, {1.0, 2.0}));
  const auto report = check_gradients(
      [&](ad::Graph& g) {
        auto w = g.param(store.get("w"));
        return ad::sum(ad::mul(w, w));
      },
      store);
  CHECK(report.checked == 2);
  CHECK(report.max_rel_error < 1e-8);
  ad::Graph g;
  auto w = g.param(store.get("w"));
  store.zero_grad();
  g.backward(ad::sum(ad::mul(w, w)));
  CHECK(store.get("w").grad[0] == 2.0);
  CHECK(store.get("w").grad[1] == 4.0);
}

TEST_CASE("check_gradients on a softmax plus MSE layer") {
  Rng rng(5);
  ParameterStore store;
  store.add_xavier("w", {3, 4}, 4, 3, rng);
  store.add("b", random_tensor({3}, rng));
  const Tensor x = random_tensor({5, 4}, rng), y = random_tensor({5, 3}, rng, 0.0, 1.0);
  const auto report = check_gradients(
      [&](ad::Graph& g) {
        auto p = ad::softmax(ad::linear(g.constant(x), g.param(store.get("w")), g.param(store.get("b"))), 1);
        return ad::mse_loss(p, g.constant(y));
      },
      store, GradCheckOptions{1e-5, 1e-6, 0});
  CHECK(report.checked == 15);
  CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("check_gradients edge cases") {
  ParameterStore empty;
  const auto report = check_gradients([](ad::Graph& g) { return g.constant(Tensor::scalar(1.0)); }, empty);
  CHECK(report.checked == 0);
  CHECK(report.max_rel_error == 0.0);

  ParameterStore store;
  store.add("w", Tensor({2}, 1.0));
  CHECK_THROWS_AS(check_gradients([&](ad::Graph& g) { return g.param(store.get("w")); }, store), UsageError);
}

TEST_CASE("randomized compositions match finite differences") {
  Rng rng(6);
  using Fn = std::function<ad::Var(ad::Graph&, ad::Var)>;
  const Tensor other = random_tensor({3, 4}, rng, 0.5, 1.5);
  const Tensor gamma = random_tensor({4}, rng), beta = random_tensor({4}, rng);
  const std::vector<std::pair<const char*, Fn>> cases{
      {"tanh-matmul", [&](ad::Graph& g, ad::Var x) {
         return ad::sum(ad::tanh(ad::matmul(x, ad::permute(g.constant(other), {1, 0}))));
       }},
      {"div-broadcast", [&](ad::Graph& g, ad::Var x) {
         return ad::mean(ad::div(x, ad::add_scalar(ad::square(ad::slice(g.constant(other), 0, 0, 1)), 1.0)));
       }},
      {"gelu-layernorm", [&](ad::Graph& g, ad::Var x) {
         return ad::sum(ad::gelu(ad::layer_norm(x, g.constant(gamma), g.constant(beta))));
       }},
      {"softmax-axis0", [&](ad::Graph& g, ad::Var x) {
         return ad::sum(ad::mul(ad::softmax(x, 0), g.constant(other)));
       }},
      {"concat-sum-axis", [&](ad::Graph& g, ad::Var x) {
         const ad::Var parts[] = {x, ad::scale(x, 2.0), g.constant(other)};
         return ad::sum(ad::square(ad::sum_axis(ad::concat(parts, 1), 1)));
       }},
      {"bmm-transpose", [&](ad::Graph&, ad::Var x) {
         auto a = ad::reshape(x, {1, 3, 4});
         return ad::sum(ad::sigmoid(ad::bmm(a, a, true)));
       }},
      {"mae-broadcast-to", [&](ad::Graph& g, ad::Var x) {
         return ad::mae_loss(ad::broadcast_to(ad::mean_axis(x, 0), {3, 4}), g.constant(other));
       }},
      {"abs-sub-mean", [&](ad::Graph& g, ad::Var x) {
         return ad::mean(ad::abs(ad::sub(x, g.constant(other))));
       }},
  };
  for (const auto& [name, fn] : cases) {
    CAPTURE(name);
    for (int trial = 0; trial < 5; ++trial) {
      const Tensor x = random_tensor({3, 4}, rng);
      const Tensor ga = analytic_grad(fn, x);
      const Tensor fd = numeric_grad([&](const Tensor& t) { return eval_scalar(fn, t); }, x);
      CHECK(max_rel_error(ga, fd) < 1e-5);
    }
  }
}

TEST_CASE("broadcast gradients reduce over broadcast axes") {
  ad::Graph g;
  auto a = g.variable(Tensor({2, 3}, 1.0));
  auto b = g.variable(Tensor({3}, {1.0, 2.0, 3.0}));
  g.backward(ad::sum(ad::mul(a, b)));
  CHECK(g.grad(b) == Tensor({3}, {2.0, 2.0, 2.0}));
  CHECK(g.grad(a) == Tensor({2, 3}, {1, 2, 3, 1, 2, 3}));
  CHECK(ad::broadcast_shape({4, 1, 3}, {2, 1}) == Shape{4, 2, 3});
  CHECK_THROWS_AS(ad::broadcast_shape({2, 3}, {4}), DimensionError);
}

TEST_CASE("non-finite results raise a numeric error naming the op") {
  ad::Graph g;
  auto x = g.constant(Tensor({2}, {1.0, 0.0}));
  try {
    (void)ad::div(x, g.constant(Tensor({2}, 0.0)));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("div") != std::string::npos);
  }
  CHECK_THROWS_AS(g.constant(Tensor({1}, {std::nan("")})), NumericError);
}

TEST_CASE("backward requires a scalar and runs once") {
  ad::Graph g;
  auto x = g.variable(Tensor({2}, 1.0));
  CHECK_THROWS_AS(g.backward(ad::scale(x, 2.0)), UsageError);
  ad::Graph h;
  auto y = h.variable(Tensor({2}, 1.0));
  auto loss = ad::sum(y);
  h.backward(loss);
  CHECK_THROWS_AS(h.backward(loss), UsageError);
}

TEST_CASE("shared subexpressions accumulate gradient") {
  ad::Graph g;
  auto x = g.variable(Tensor::scalar(3.0));
  auto y = ad::mul(x, x);
  g.backward(ad::add(y, ad::scale(y, 2.0)));
  CHECK(g.grad(x).item() == 18.0);
}

TEST_CASE("identical seeds give bit-identical forward results") {
  auto run = [] {
    Rng rng(77);
    const Tensor a = random_tensor({4, 5}, rng), b = random_tensor({5, 3}, rng);
    ad::Graph g;
    return ad::softmax(ad::gelu(ad::matmul(g.constant(a), g.constant(b))), 1).value();
  };
  CHECK(run() == run());
}

TEST_CASE("parameter store naming and checkpoint round trip") {
  Rng rng(8);
  ParameterStore store;
  store.add_xavier("a.w", {3, 2}, 2, 3, rng);
  store.add("b", Tensor({1}, {0.1}));
  store.add("c", Tensor({2}, {1.0 / 3.0, -2.5e-300}));
  CHECK_THROWS_AS(store.add("b", Tensor({1})), ParameterError);
  CHECK_THROWS_AS(store.add("bad name", Tensor({1})), ParameterError);
  const double bound = std::sqrt(6.0 / 5.0);
  for (double v : store.get("a.w").value.data()) CHECK(std::fabs(v) <= bound);

  std::stringstream ss;
  write_checkpoint(store, ss);
  const ParameterStore back = read_checkpoint(ss);
  REQUIRE(back.count() == 3);
  auto it = back.begin();
  for (const auto& p : store) {
    CHECK(it->name == p.name);
    CHECK(it->value == p.value);
    ++it;
  }
  ParameterStore target;
  target.add("a.w", Tensor({3, 2}));
  target.add("b", Tensor({1}));
  target.add("c", Tensor({2}));
  load_checkpoint_into(target, back);
  CHECK(target.get("c").value == store.get("c").value);

  ParameterStore wrong;
  wrong.add("a.w", Tensor({2, 3}));
  CHECK_THROWS_AS(load_checkpoint_into(wrong, back), ParameterError);

  std::stringstream bad("segcast-checkpoint 1 1\nparam x 1 2\n1.0\n");
  CHECK_THROWS(read_checkpoint(bad));
}

TEST_CASE("format_double round-trips exactly") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(123), b(123), c(124);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng(123).next_u64() != c.next_u64());
  CHECK(Rng::stream(5, 1).next_u64() == Rng::stream(5, 1).next_u64());
  CHECK(Rng::stream(5, 1).next_u64() != Rng::stream(5, 2).next_u64());
  Rng r(10);
  double mean = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    mean += z;
    sq += z * z;
  }
  mean /= n;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(sq / n - 1.0) < 0.02);
  for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
}
