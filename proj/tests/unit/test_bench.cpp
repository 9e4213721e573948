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

#include <atomic>
#include <cmath>
#include <sstream>

#include "segcast/bench.hpp"
#include "segcast/errors.hpp"

using namespace segcast;

namespace {

std::vector<double> state(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> h(d);
  for (auto& v : h) v = rng.normal();
  return h;
}

double rel(std::uint64_t measured, std::uint64_t analytic) {
  return std::fabs(static_cast<double>(measured) - static_cast<double>(analytic)) / static_cast<double>(analytic);
}

}  // namespace

TEST_CASE("analytic cost examples") {
  const CostModel base{256, 96, 48};
  CHECK(flops(base, DecodeMode::kAr) == 96ull * 2 * 256 * 256);
  CHECK(flops(base, DecodeMode::kNar) == 2ull * 2 * 256 * 256);
  CHECK(flops(base, DecodeMode::kAr) / flops(base, DecodeMode::kNar) == 48);

  const CostModel longer{256, 720, 48};
  CHECK(static_cast<double>(flops(longer, DecodeMode::kAr)) / static_cast<double>(flops(base, DecodeMode::kAr)) ==
        7.5);
  CHECK(flops(longer, DecodeMode::kNar) == 15ull * 2 * 256 * 256);

  const CostModel wide{512, 96, 48};
  for (auto mode : {DecodeMode::kAr, DecodeMode::kNar}) CHECK(flops(wide, mode) == 4 * flops(base, mode));

  const CostModel single{64, 1, 1};
  CHECK(flops(single, DecodeMode::kAr) == 2ull * 64 * 64);
  CHECK(flops(single, DecodeMode::kNar) == 2ull * 64 * 64);

  CHECK_THROWS_AS(CostModel({64, 100, 48}).validate(), ConfigError);
  CHECK_THROWS_AS(CostModel({0, 96, 48}).validate(), ConfigError);
  CHECK_THROWS_AS(CostModel({64, 96, 0}).validate(), ConfigError);
}

TEST_CASE("instrumented counts follow the cost model") {
  for (std::size_t d : {64, 256}) {
    Rng rng(3);
    const ArDecoder ar(d, rng);
    const NarDecoder nar(d, 48, 15, rng);
    const auto h = state(d, 4);
    for (std::size_t H : {96, 720}) {
      std::uint64_t car = 0, cnar = 0;
      ar.decode(h, 0.1, H, &car);
      nar.decode(h, H / 48, nullptr, &cnar);
      const CostModel cm{d, H, 48};
      if (d == 256) {
        CHECK(rel(car, flops(cm, DecodeMode::kAr)) < 0.01);
        CHECK(rel(cnar, flops(cm, DecodeMode::kNar)) < 0.01);
      }
      // The dominant d x d term is exact; the rest is O(d) per step or head.
      CHECK(car >= flops(cm, DecodeMode::kAr));
      CHECK(cnar >= flops(cm, DecodeMode::kNar));
    }
  }
}

TEST_CASE("decoders are deterministic and counting does not change outputs") {
  Rng r1(9), r2(9);
  const ArDecoder a(16, r1), b(16, r2);
  const auto h = state(16, 1);
  std::uint64_t count = 0;
  const auto ya = a.decode(h, 0.5, 24);
  CHECK(ya == b.decode(h, 0.5, 24, &count));
  CHECK(ya.size() == 24);
  for (double v : ya) CHECK(std::isfinite(v));
  // Teacher forcing with the model's own outputs reproduces free running.
  std::vector<double> teacher(ya.begin(), ya.end());
  CHECK(a.decode(h, 0.5, 24, nullptr, &teacher) == ya);
  std::vector<double> other(24, 3.0);
  CHECK(a.decode(h, 0.5, 24, nullptr, &other) != ya);
}

TEST_CASE("parallel heads match sequential decoding") {
  Rng rng(5);
  const NarDecoder nar(32, 8, 12, rng);
  const auto h = state(32, 2);
  const auto seq = nar.decode(h, 12);
  CHECK(seq.size() == 96);
  ThreadPool pool(3);
  CHECK(pool.size() == 3);
  CHECK(nar.decode(h, 12, &pool) == seq);
  CHECK(nar.decode(h, 12, &pool) == seq);
  // Fewer heads decode a prefix.
  const auto part = nar.decode(h, 5, &pool);
  CHECK(std::equal(part.begin(), part.end(), seq.begin()));
  CHECK_THROWS_AS(nar.decode(h, 13), ConfigError);
}

TEST_CASE("thread pool runs every index once") {
  ThreadPool pool(4);
  for (std::size_t n : {0, 1, 7, 100}) {
    std::vector<std::atomic<int>> hits(n);
    pool.parallel_for(n, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
}

TEST_CASE("bench report covers both modes at every horizon") {
  BenchConfig cfg;
  cfg.d = 64;
  cfg.reps = 3;
  cfg.warmup = 1;
  cfg.parallel_heads = true;
  cfg.threads = 2;
  const BenchReport r = run_bench(cfg);
  REQUIRE(r.records.size() == 8);
  for (const auto& rec : r.records) {
    CHECK(rec.wall_ns > 0.0);
    CHECK(rec.reps == 3);
    CHECK(rec.flops == flops(CostModel{64, rec.horizon, 48}, rec.mode));
  }
  CHECK(r.clock_granularity_ns > 0.0);
  std::ostringstream os;
  write_bench_csv(r.records, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "mode,horizon,flops,wall_ns,reps");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 8);

  BenchConfig bad = cfg;
  bad.horizons = {100};
  CHECK_THROWS_AS(run_bench(bad), ConfigError);
  bad = cfg;
  bad.reps = 0;
  CHECK_THROWS_AS(run_bench(bad), UsageError);
}
