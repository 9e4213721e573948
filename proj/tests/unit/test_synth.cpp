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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "segcast/errors.hpp"
#include "segcast/synth.hpp"

using namespace segcast;
namespace fs = std::filesystem;

namespace {

std::string series_bytes(const SynthDataset& d) {
  std::ostringstream os;
  write_series_csv(d.series, os);
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("segcast_synth_" + name);
  fs::remove_all(p);
  return p;
}

// Stacks row r of each window into an [N x H] matrix.
Tensor stack_rows(const std::vector<Tensor>& rows) {
  const std::size_t H = rows.front().size();
  Tensor out({rows.size(), H});
  for (std::size_t n = 0; n < rows.size(); ++n)
    for (std::size_t j = 0; j < H; ++j) out[n * H + j] = rows[n][j];
  return out;
}

bool same(const Tensor& a, const Tensor& b) { return a.shape() == b.shape() && std::ranges::equal(a.data(), b.data()); }

}  // namespace

TEST_CASE("mode values") {
  MixtureSpec s;
  s.amplitude = 2.0;
  CHECK(s.mode_value(0, 3, 4) == 2.0);
  CHECK(s.mode_value(1, 3, 4) == -2.0);
  CHECK(s.mode_value(0, 0, 4) == 0.5);
  s.weights = {0.2, 0.3, 0.5};
  CHECK(s.mode_value(1, 3, 4) == 0.0);
  s.shape = ModeShape::kSine;
  s.weights = {0.5, 0.5};
  CHECK(s.mode_value(0, 1, 4) == doctest::Approx(2.0 * std::sin(M_PI)).epsilon(1e-12));
  CHECK(s.mode_value(1, 0, 4) == doctest::Approx(2.0 * std::sin(M_PI / 2 + M_PI)));
}

TEST_CASE("mixture validation and text round trip") {
  MixtureSpec s;
  s.weights = {0.25, 0.75};
  s.shape = ModeShape::kSine;
  s.noise_std = 0.1;
  s.conditional_weights = true;
  s.threshold = -0.5;
  const MixtureSpec back = MixtureSpec::parse(s.to_text());
  CHECK(back.to_text() == s.to_text());
  CHECK(back.weights == s.weights);

  MixtureSpec bad;
  bad.weights = {0.5, 0.6};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.weights = {1.2, -0.2};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.weights = {};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  MixtureSpec neg;
  neg.noise_std = -1.0;
  CHECK_THROWS_AS(neg.validate(), ConfigError);
  CHECK_THROWS_AS(MixtureSpec::parse("shape = square\n"), ConfigError);
  CHECK_THROWS_AS(MixtureSpec::parse("colour = red\n"), ConfigError);
}

TEST_CASE("single-mode conditional mean is the mode itself") {
  MixtureSpec s;
  s.weights = {1.0};
  const Tensor h({1, 8}, 0.3);
  const Tensor m = s.conditional_mean(h, 6);
  for (std::size_t j = 0; j < 6; ++j) CHECK(m[j] == s.mode_value(0, j, 6));
  const auto d = generate(s, 20, 8, 6, 3);
  for (const auto& w : d.windows) CHECK(w.label == 0);
}

TEST_CASE("symmetric ramps have zero conditional mean") {
  const MixtureSpec s;
  const Tensor m = s.conditional_mean(Tensor({1, 4}, 1.0), 8);
  for (double v : m.data()) CHECK(v == 0.0);

  const std::size_t n = 100000, H = 4;
  const auto d = generate(s, n, 4, H, 9);
  std::vector<double> mean(H, 0.0);
  for (const auto& w : d.windows)
    for (std::size_t j = 0; j < H; ++j) mean[j] += w.target[j];
  for (std::size_t j = 0; j < H; ++j) {
    mean[j] /= static_cast<double>(n);
    // Per-sample variance is at most A^2 + sigma^2; allow 4 standard errors.
    CHECK(std::fabs(mean[j]) < 4.0 * std::sqrt(1.0 + 0.05 * 0.05) / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("mode frequencies follow the weights") {
  MixtureSpec s;
  s.weights = {0.2, 0.5, 0.3};
  const std::size_t n = 10000;
  const auto d = generate(s, n, 8, 4, 21);
  std::vector<double> count(3, 0.0);
  for (const auto& w : d.windows) count[static_cast<std::size_t>(w.label)] += 1.0;
  for (std::size_t m = 0; m < 3; ++m) {
    const double p = s.weights[m];
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
    CHECK(std::fabs(count[m] / static_cast<double>(n) - p) < 3.0 * se);
  }
}

TEST_CASE("conditional weights flip with the history") {
  MixtureSpec s;
  s.weights = {0.9, 0.1};
  s.conditional_weights = true;
  Tensor low({1, 3}, {0.0, 0.0, -1.0}), high({1, 3}, {0.0, 0.0, 1.0});
  CHECK(s.weights_for(low) == std::vector<double>{0.1, 0.9});
  CHECK(s.weights_for(high) == std::vector<double>{0.9, 0.1});
  const auto d = generate(s, 4000, 16, 4, 5);
  double agree = 0.0;
  for (const auto& w : d.windows) {
    const bool below = w.context[15] < 0.0;
    agree += (below ? w.label == 1 : w.label == 0) ? 1.0 : 0.0;
  }
  CHECK(agree / 4000.0 == doctest::Approx(0.9).epsilon(0.03));
}

TEST_CASE("generation is deterministic per seed") {
  const MixtureSpec s;
  const auto a = generate(s, 50, 16, 8, 77);
  const auto b = generate(s, 50, 16, 8, 77);
  const auto c = generate(s, 50, 16, 8, 78);
  CHECK(series_bytes(a) == series_bytes(b));
  CHECK(series_bytes(a) != series_bytes(c));
  // A prefix of a larger dataset is the smaller dataset.
  const auto big = generate(s, 60, 16, 8, 77);
  for (std::size_t i = 0; i < 50; ++i) CHECK(same(big.windows[i].target, a.windows[i].target));
}

TEST_CASE("written dataset reloads to the same windows") {
  MixtureSpec s;
  s.channels = 2;
  const auto d = generate(s, 12, 10, 5, 4);
  const fs::path dir = scratch("roundtrip");
  write_dataset(d, s, dir.string());
  CHECK(fs::exists(dir / "series.csv"));
  CHECK(fs::exists(dir / "labels.csv"));
  CHECK(fs::exists(dir / "mixture.txt"));
  const auto back = load_windows(dir.string(), 10, 5, 0);
  REQUIRE(back.size() == d.windows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].label == d.windows[i].label);
    CHECK(back[i].start == d.windows[i].start);
    CHECK(same(back[i].context, d.windows[i].context));
    CHECK(same(back[i].target, d.windows[i].target));
  }
  std::ifstream in(dir / "mixture.txt");
  std::stringstream text;
  text << in.rdbuf();
  CHECK(MixtureSpec::parse(text.str()).to_text() == s.to_text());
  fs::remove_all(dir);
}

TEST_CASE("mode metrics on hand-built predictions") {
  // Two windows, H = 2, two experts at +1 and -1.
  ModeMetricsInput in;
  in.expert_preds = {Tensor({2, 2}, {1.0, 1.0, 1.0, 1.0}), Tensor({2, 2}, {-1.0, -1.0, -1.0, -1.0})};
  in.targets = Tensor({2, 2}, {1.0, 1.0, -1.0, -1.0});
  in.cond_mean = Tensor({2, 2}, 0.0);
  in.labels = {0, 1};
  const ModeMetrics m = mode_metrics(in);
  CHECK(m.windows == 2);
  CHECK(m.mean_head_error == 1.0);  // mixture defaults to the expert mean, zero
  CHECK(m.best_of_e_error == 0.0);
  CHECK(m.diversity == 2.0);
  CHECK(m.cond_mean_gap == 0.0);
  REQUIRE(m.per_mode_error.size() == 2);
  CHECK(m.per_mode_error[0] == 1.0);

  ModeMetricsInput same = in;
  same.expert_preds = {in.expert_preds[0], in.expert_preds[0]};
  const ModeMetrics s = mode_metrics(same);
  CHECK(s.diversity == 0.0);
  CHECK(s.best_of_e_error == s.mean_head_error);

  ModeMetricsInput one = in;
  one.expert_preds = {Tensor({2, 2}, {0.5, 0.0, 0.2, 0.1})};
  const ModeMetrics o = mode_metrics(one);
  CHECK(o.best_of_e_error == o.mean_head_error);
  CHECK(o.diversity == 0.0);

  ModeMetricsInput mae = in;
  mae.criterion = Criterion::kMae;
  mae.mixture = Tensor({2, 2}, 0.5);
  CHECK(mode_metrics(mae).mean_head_error == 1.0);

  ModeMetricsInput broken = in;
  broken.targets = Tensor({3, 2});
  CHECK_THROWS_AS(mode_metrics(broken), DimensionError);
}

TEST_CASE("planted experts reach the noise floor") {
  const MixtureSpec s;
  const std::size_t H = 8;
  const auto d = generate(s, 500, 16, H, 31);
  std::vector<Tensor> t, e0, e1, cm;
  std::vector<int> labels;
  double noise = 0.0;
  for (const auto& w : d.windows) {
    Tensor a({H}), b({H});
    for (std::size_t j = 0; j < H; ++j) {
      a[j] = s.mode_value(0, j, H);
      b[j] = s.mode_value(1, j, H);
      const double r = w.target[j] - (w.label == 0 ? a[j] : b[j]);
      noise += r * r / static_cast<double>(H);
    }
    t.push_back(w.target);
    e0.push_back(a);
    e1.push_back(b);
    cm.push_back(s.conditional_mean(w.context, H));
    labels.push_back(w.label);
  }
  noise /= static_cast<double>(d.windows.size());
  ModeMetricsInput in;
  in.expert_preds = {stack_rows(e0), stack_rows(e1)};
  in.targets = stack_rows(t);
  in.cond_mean = stack_rows(cm);
  in.labels = labels;
  const ModeMetrics m = mode_metrics(in);
  CHECK(m.best_of_e_error == doctest::Approx(noise).epsilon(1e-12));
  CHECK(m.best_of_e_error < 0.05 * 0.05 * 1.5);
  CHECK(m.diversity == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.cond_mean_gap < 1e-30);
  CHECK(m.mean_head_error > 0.3);
}
