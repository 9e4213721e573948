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

#include "segcast/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>

#include "segcast/config.hpp"
#include "segcast/errors.hpp"
#include "segcast/model.hpp"
#include "segcast/parameters.hpp"

namespace segcast {

const char* to_string(DecodeMode mode) { return mode == DecodeMode::kAr ? "AR" : "NAR"; }

void CostModel::validate() const {
  if (d == 0 || horizon == 0 || seg_len == 0) throw ConfigError("bench", "d, horizon and seg_len must be positive");
  if (horizon % seg_len != 0) {
    throw ConfigError("bench", "horizon " + std::to_string(horizon) + " is not a multiple of segment length " +
                                   std::to_string(seg_len));
  }
}

std::uint64_t flops(const CostModel& model, DecodeMode mode) {
  model.validate();
  const std::uint64_t per_map = 2ull * model.d * model.d;
  return (mode == DecodeMode::kAr ? model.horizon : model.segments()) * per_map;
}

ThreadPool::ThreadPool(std::size_t threads) {
  for (std::size_t i = 0; i < std::max<std::size_t>(threads, 1); ++i) workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& t : workers_) t.join();
}

void ThreadPool::worker_loop() {
  std::uint64_t seen = 0;
  std::unique_lock lock(mu_);
  for (;;) {
    wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
    if (stop_) return;
    seen = generation_;
    while (next_ < total_) {
      const std::size_t i = next_++;
      const auto* job = job_;
      lock.unlock();
      (*job)(i);
      lock.lock();
      if (++finished_ == total_) done_.notify_all();
    }
  }
}

void ThreadPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::unique_lock lock(mu_);
  job_ = &fn;
  next_ = 0;
  total_ = n;
  finished_ = 0;
  ++generation_;
  wake_.notify_all();
  done_.wait(lock, [&] { return finished_ == total_; });
  job_ = nullptr;
}

namespace {

void fill_uniform(std::vector<double>& v, std::size_t n, double bound, Rng& rng) {
  v.resize(n);
  for (auto& x : v) x = rng.uniform(-bound, bound);
}

}  // namespace

ArDecoder::ArDecoder(std::size_t d, Rng& rng) : d_(d) {
  if (d == 0) throw ConfigError("bench", "decoder width must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  fill_uniform(w_, d * d, bound, rng);
  fill_uniform(u_, d, bound, rng);
  fill_uniform(c_, d, bound, rng);
  fill_uniform(out_, d, bound, rng);
}

template <bool Count>
std::vector<double> ArDecoder::run(std::span<const double> h0, double y0, std::size_t horizon, std::uint64_t& count,
                                   const std::vector<double>* teacher) const {
  std::vector<double> h(h0.begin(), h0.end()), next(d_), y(horizon);
  double prev = y0;
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < d_; ++i) {
      const double* row = &w_[i * d_];
      double acc = 0.0;
      for (std::size_t j = 0; j < d_; ++j) {
        acc += row[j] * h[j];
        if constexpr (Count) count += 2;
      }
      acc += u_[i] * prev;
      if constexpr (Count) count += 2;
      next[i] = std::tanh(acc + c_[i]);
    }
    h.swap(next);
    double out = 0.0;
    for (std::size_t i = 0; i < d_; ++i) {
      out += out_[i] * h[i];
      if constexpr (Count) count += 2;
    }
    y[t] = out;
    prev = teacher ? (*teacher)[t] : out;
  }
  return y;
}

std::vector<double> ArDecoder::decode(std::span<const double> h0, double y0, std::size_t horizon,
                                      std::uint64_t* flop_counter, const std::vector<double>* teacher) const {
  if (h0.size() != d_) throw DimensionError("bench", "AR state has width " + std::to_string(h0.size()));
  if (teacher && teacher->size() < horizon) throw DimensionError("bench", "teacher sequence shorter than horizon");
  std::uint64_t count = 0;
  if (flop_counter) {
    auto y = run<true>(h0, y0, horizon, count, teacher);
    *flop_counter += count;
    return y;
  }
  return run<false>(h0, y0, horizon, count, teacher);
}

NarDecoder::NarDecoder(std::size_t d, std::size_t seg_len, std::size_t max_segments, Rng& rng)
    : d_(d), seg_len_(seg_len), max_segments_(max_segments) {
  if (d == 0 || seg_len == 0) throw ConfigError("bench", "decoder width and segment length must be positive");
  if (seg_len > d) throw ConfigError("bench", "segment length may not exceed the decoder width");
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  w_.resize(max_segments);
  c_.resize(max_segments);
  a_.resize(max_segments);
  b_.resize(max_segments);
  for (std::size_t k = 0; k < max_segments; ++k) {
    fill_uniform(w_[k], d * d, bound, rng);
    fill_uniform(c_[k], d, bound, rng);
    fill_uniform(a_[k], seg_len, 1.0, rng);
    fill_uniform(b_[k], seg_len, 0.1, rng);
  }
}

template <bool Count>
void NarDecoder::head(std::size_t k, std::span<const double> h0, double* out, std::uint64_t& count) const {
  const auto& W = w_[k];
  std::vector<double> u(d_);
  for (std::size_t i = 0; i < d_; ++i) {
    const double* row = &W[i * d_];
    double acc = 0.0;
    for (std::size_t j = 0; j < d_; ++j) {
      acc += row[j] * h0[j];
      if constexpr (Count) count += 2;
    }
    u[i] = std::tanh(acc + c_[k][i]);
  }
  for (std::size_t t = 0; t < seg_len_; ++t) {
    out[t] = a_[k][t] * u[t] + b_[k][t];
    if constexpr (Count) count += 2;
  }
}

std::vector<double> NarDecoder::decode(std::span<const double> h0, std::size_t segments, ThreadPool* pool,
                                       std::uint64_t* flop_counter) const {
  if (h0.size() != d_) throw DimensionError("bench", "NAR state has width " + std::to_string(h0.size()));
  if (segments > max_segments_) {
    throw ConfigError("bench", "decoder holds " + std::to_string(max_segments_) + " heads, asked for " +
                                   std::to_string(segments));
  }
  std::vector<double> y(segments * seg_len_);
  if (flop_counter) {
    // Instrumented runs are sequential so the counter needs no synchronization.
    std::uint64_t count = 0;
    for (std::size_t k = 0; k < segments; ++k) head<true>(k, h0, &y[k * seg_len_], count);
    *flop_counter += count;
    return y;
  }
  std::uint64_t unused = 0;
  if (pool) {
    pool->parallel_for(segments, [&](std::size_t k) {
      std::uint64_t local = 0;
      head<false>(k, h0, &y[k * seg_len_], local);
    });
  } else {
    for (std::size_t k = 0; k < segments; ++k) head<false>(k, h0, &y[k * seg_len_], unused);
  }
  return y;
}

double clock_granularity_ns() {
  using clock = std::chrono::steady_clock;
  double best = 1e18;
  for (int i = 0; i < 64; ++i) {
    const auto a = clock::now();
    auto b = clock::now();
    while (b == a) b = clock::now();
    best = std::min(best, static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count()));
  }
  return std::max(best, 1.0);
}

namespace {

template <typename Fn>
double median_ns(std::size_t warmup, std::size_t reps, Fn&& fn) {
  using clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::vector<double> times;
  times.reserve(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    const auto a = clock::now();
    fn();
    const auto b = clock::now();
    times.push_back(static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count()));
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

// Shared encoder: the forecaster's patch embedding and transformer with
// D = d / P hidden units, so the flattened state has width d.
Tensor shared_state(std::size_t d, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.context = 512;
  const std::size_t P = cfg.tokens();
  if (d % P != 0) throw ConfigError("bench", "d must be a multiple of " + std::to_string(P));
  cfg.hidden = d / P;
  cfg.heads = 1;
  cfg.n_exo = 0;
  cfg.horizon = cfg.segment_len;
  cfg.head = HeadKind::kLinear;
  cfg.refine_mode = RefineMode::kNone;
  cfg.seed = seed;
  const Model model(cfg);
  Tensor context({1, 1, cfg.context});
  for (std::size_t t = 0; t < cfg.context; ++t) {
    context[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0);
  }
  return model.encode(context);
}

}  // namespace

BenchReport run_bench(const BenchConfig& config) {
  if (config.horizons.empty()) throw UsageError("bench", "no horizons given");
  if (config.reps == 0) throw UsageError("bench", "repetitions must be positive");
  std::size_t max_segments = 0;
  for (std::size_t h : config.horizons) {
    CostModel{config.d, h, config.seg_len}.validate();
    max_segments = std::max(max_segments, h / config.seg_len);
  }
  BenchReport report;
  report.clock_granularity_ns = clock_granularity_ns();
  const std::size_t hw = std::max<unsigned>(std::thread::hardware_concurrency(), 1u);
  report.threads = config.parallel_heads ? (config.threads ? config.threads : hw) : 1;

  const Tensor state = shared_state(config.d, config.seed);
  const std::span<const double> h0 = state.data();
  Rng rng(config.seed);
  const ArDecoder ar(config.d, rng);
  const NarDecoder nar(config.d, config.seg_len, max_segments, rng);
  std::unique_ptr<ThreadPool> pool;
  if (config.parallel_heads) pool = std::make_unique<ThreadPool>(report.threads);

  volatile double sink = 0.0;
  for (std::size_t h : config.horizons) {
    const CostModel cm{config.d, h, config.seg_len};
    for (DecodeMode mode : {DecodeMode::kAr, DecodeMode::kNar}) {
      BenchRecord r;
      r.mode = mode;
      r.horizon = h;
      r.flops = flops(cm, mode);
      r.reps = config.reps;
      if (mode == DecodeMode::kAr) {
        ar.decode(h0, 0.0, h, &r.measured_flops);
        r.wall_ns = median_ns(config.warmup, config.reps, [&] { sink = sink + ar.decode(h0, 0.0, h).back(); });
      } else {
        nar.decode(h0, cm.segments(), nullptr, &r.measured_flops);
        r.wall_ns = median_ns(config.warmup, config.reps,
                              [&] { sink = sink + nar.decode(h0, cm.segments(), pool.get()).back(); });
      }
      if (r.wall_ns < 100.0 * report.clock_granularity_ns) {
        report.warnings.push_back(std::string("timer resolution: ") + to_string(mode) + " H=" + std::to_string(h) +
                                  " median " + format_double(r.wall_ns) + " ns is below 100x the clock step of " +
                                  format_double(report.clock_granularity_ns) + " ns");
      }
      report.records.push_back(r);
    }
  }
  return report;
}

void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& os) {
  os << "mode,horizon,flops,wall_ns,reps\n";
  for (const auto& r : records) {
    os << to_string(r.mode) << ',' << r.horizon << ',' << r.flops << ',' << format_double(r.wall_ns) << ',' << r.reps
       << '\n';
  }
}

}  // namespace segcast
