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

#include <cstdint>
#include <string>
#include <vector>

#include "segcast/dataset.hpp"
#include "segcast/sage.hpp"
#include "segcast/tensor.hpp"

namespace segcast {

enum class ModeShape { kRamp, kSine };

// Mixture p(Y | X) = sum_m pi_m(X) p_m(Y | X). Histories come from one shared
// generator (a sine with random phase plus noise), so windows of different
// modes have statistically identical histories. Mode m emits a deterministic
// future curve plus Gaussian observation noise.
struct MixtureSpec {
  std::vector<double> weights{0.5, 0.5};  // pi_m, one per mode
  ModeShape shape = ModeShape::kRamp;
  double amplitude = 1.0;
  double noise_std = 0.05;
  double history_amplitude = 1.0;
  std::size_t history_period = 16;
  std::size_t channels = 1;
  // Optional history-dependent weights: when the last history value of
  // channel 0 is below the threshold, the weight vector is reversed.
  bool conditional_weights = false;
  double threshold = 0.0;

  std::size_t modes() const { return weights.size(); }
  void validate() const;

  // Noise-free value of mode m at future step j (0-based) of a horizon H.
  // Ramps run linearly to a per-mode level spaced evenly in [-A, A]
  // (M = 2 gives +A and -A); sines are phase-shifted by 2 pi m / M.
  double mode_value(std::size_t mode, std::size_t step, std::size_t horizon) const;
  // pi(X) for a history [C x T].
  std::vector<double> weights_for(const Tensor& history) const;
  // Analytic conditional mean E[Y | X], [C x H].
  Tensor conditional_mean(const Tensor& history, std::size_t horizon) const;

  std::string to_text() const;
  static MixtureSpec parse(const std::string& text);
};

struct SynthDataset {
  Series series;                  // windows laid end to end
  std::vector<LabelRow> labels;   // start row and mode of every window
  std::vector<Window> windows;
  std::size_t context = 0;
  std::size_t horizon = 0;
};

// Window i draws from Rng::stream(seed, i), so output is a pure function of
// (spec, n_windows, T, H, seed).
SynthDataset generate(const MixtureSpec& spec, std::size_t n_windows, std::size_t context, std::size_t horizon,
                      std::uint64_t seed);

// Writes series.csv, labels.csv and mixture.txt into dir.
void write_dataset(const SynthDataset& data, const MixtureSpec& spec, const std::string& dir);

struct ModeMetricsInput {
  std::vector<Tensor> expert_preds;  // E x [N x H]
  Tensor mixture;                    // [N x H]; empty means the mean of the experts
  Tensor targets;                    // [N x H]
  Tensor cond_mean;                  // [N x H]; empty skips the gap
  std::vector<int> labels;           // N mode labels, may be empty
  Criterion criterion = Criterion::kMse;
};

struct ModeMetrics {
  double mean_head_error = 0.0;   // criterion(mixture, target)
  double best_of_e_error = 0.0;   // mean over windows of min over experts
  double diversity = 0.0;         // mean over windows and expert pairs of max_t |a_t - b_t|
  double cond_mean_gap = 0.0;     // criterion(mixture, conditional mean)
  std::vector<double> per_mode_error;  // mean-head error by label
  std::size_t windows = 0;
};

ModeMetrics mode_metrics(const ModeMetricsInput& in);

}  // namespace segcast
