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

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "segcast/rng.hpp"
#include "segcast/tensor.hpp"

namespace segcast {

enum class DecodeMode { kAr, kNar };

const char* to_string(DecodeMode mode);

// Decoding cost of one instance: horizon H split into H / seg_len segments,
// decoder width d.
struct CostModel {
  std::size_t d = 256;
  std::size_t horizon = 96;
  std::size_t seg_len = 48;

  std::size_t segments() const { return seg_len == 0 ? 0 : horizon / seg_len; }
  void validate() const;
};

// Analytic decoder cost: AR H * 2d^2, NAR S_num * 2d^2. The shared encoder is
// not counted.
std::uint64_t flops(const CostModel& model, DecodeMode mode);

// Fixed-size worker pool with a blocking parallel_for.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t threads);
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  // Runs fn(0..n-1) across the workers and returns when all calls finished.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);
  std::size_t size() const { return workers_.size(); }

 private:
  void worker_loop();

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable wake_, done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t next_ = 0, total_ = 0, finished_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

// Autoregressive decoder: one d x d recurrent map per generated step,
//   h_t = tanh(W h_{t-1} + u y_{t-1} + c),  y_t = w_out . h_t
// conditioned on its own previous output (or a teacher sequence).
class ArDecoder {
 public:
  ArDecoder(std::size_t d, Rng& rng);

  // h0: shared encoder state [d]; y0: last observed value. When teacher is
  // given, y_{t-1} is read from it instead of the model's own output.
  std::vector<double> decode(std::span<const double> h0, double y0, std::size_t horizon,
                             std::uint64_t* flop_counter = nullptr, const std::vector<double>* teacher = nullptr) const;

  std::size_t width() const { return d_; }

 private:
  template <bool Count>
  std::vector<double> run(std::span<const double> h0, double y0, std::size_t horizon, std::uint64_t& count,
                          const std::vector<double>* teacher) const;

  std::size_t d_;
  std::vector<double> w_, u_, c_, out_;
};

// Non-autoregressive decoder: independent segment heads, each one d x d map
// of the shared state followed by an elementwise affine read-out,
//   u_k = tanh(W_k h + c_k),  y_{k,t} = a_{k,t} u_k[t] + b_{k,t}.
class NarDecoder {
 public:
  NarDecoder(std::size_t d, std::size_t seg_len, std::size_t max_segments, Rng& rng);

  // Without a pool the heads run one after another on the calling thread.
  std::vector<double> decode(std::span<const double> h0, std::size_t segments, ThreadPool* pool = nullptr,
                             std::uint64_t* flop_counter = nullptr) const;

 private:
  template <bool Count>
  void head(std::size_t k, std::span<const double> h0, double* out, std::uint64_t& count) const;

  std::size_t d_, seg_len_, max_segments_;
  std::vector<std::vector<double>> w_, c_, a_, b_;
};

struct BenchConfig {
  std::size_t d = 256;
  std::size_t seg_len = 48;
  std::vector<std::size_t> horizons{96, 192, 336, 720};
  std::size_t reps = 30;
  std::size_t warmup = 5;
  bool parallel_heads = false;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::uint64_t seed = 7;
};

struct BenchRecord {
  DecodeMode mode = DecodeMode::kAr;
  std::size_t horizon = 0;
  std::uint64_t flops = 0;           // analytic
  std::uint64_t measured_flops = 0;  // instrumented count, 2 per multiply-add
  double wall_ns = 0.0;              // median over reps
  std::size_t reps = 0;
};

struct BenchReport {
  std::vector<BenchRecord> records;
  std::vector<std::string> warnings;
  double clock_granularity_ns = 0.0;
  std::size_t threads = 1;
};

// Smallest observable positive step of the steady clock.
double clock_granularity_ns();

// Encodes a synthetic context once with a shared encoder of width d, then for
// every horizon times AR and NAR decoding (warm-up runs discarded).
BenchReport run_bench(const BenchConfig& config);

// Columns: mode,horizon,flops,wall_ns,reps
void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& os);

}  // namespace segcast
