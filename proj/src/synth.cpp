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

#include "segcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "segcast/errors.hpp"
#include "segcast/parameters.hpp"
#include "segcast/rng.hpp"

namespace segcast {

void MixtureSpec::validate() const {
  if (weights.empty()) throw ConfigError("synth-data", "mixture needs at least one mode");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("synth-data", "mode weights must be positive");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw ConfigError("synth-data", "mode weights must sum to 1");
  if (noise_std < 0.0) throw ConfigError("synth-data", "noise std must be non-negative");
  if (history_period == 0 || channels == 0) throw ConfigError("synth-data", "period and channels must be positive");
}

double MixtureSpec::mode_value(std::size_t mode, std::size_t step, std::size_t horizon) const {
  const double M = static_cast<double>(modes());
  const double frac = static_cast<double>(step + 1) / static_cast<double>(horizon);
  if (shape == ModeShape::kRamp) {
    const double level = modes() == 1 ? amplitude : amplitude * (1.0 - 2.0 * static_cast<double>(mode) / (M - 1.0));
    return level * frac;
  }
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(mode) / M;
  return amplitude * std::sin(2.0 * std::numbers::pi * frac + phase);
}

std::vector<double> MixtureSpec::weights_for(const Tensor& history) const {
  if (!conditional_weights) return weights;
  const double last = history[history.dim(1) - 1];
  if (last >= threshold) return weights;
  return std::vector<double>(weights.rbegin(), weights.rend());
}

Tensor MixtureSpec::conditional_mean(const Tensor& history, std::size_t horizon) const {
  const auto pi = weights_for(history);
  Tensor mean({history.dim(0), horizon}, 0.0);
  for (std::size_t c = 0; c < history.dim(0); ++c)
    for (std::size_t j = 0; j < horizon; ++j) {
      double acc = 0.0;
      for (std::size_t m = 0; m < modes(); ++m) acc += pi[m] * mode_value(m, j, horizon);
      mean[c * horizon + j] = acc;
    }
  return mean;
}

std::string MixtureSpec::to_text() const {
  std::ostringstream os;
  os << "weights = ";
  for (std::size_t m = 0; m < weights.size(); ++m) os << (m ? "," : "") << format_double(weights[m]);
  os << "\nshape = " << (shape == ModeShape::kRamp ? "ramp" : "sine") << '\n'
     << "amplitude = " << format_double(amplitude) << '\n'
     << "noise_std = " << format_double(noise_std) << '\n'
     << "history_amplitude = " << format_double(history_amplitude) << '\n'
     << "history_period = " << history_period << '\n'
     << "channels = " << channels << '\n'
     << "conditional_weights = " << (conditional_weights ? "true" : "false") << '\n'
     << "threshold = " << format_double(threshold) << '\n';
  return os.str();
}

MixtureSpec MixtureSpec::parse(const std::string& text) {
  MixtureSpec spec;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ConfigError("synth-data", "malformed line '" + line + "'");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "weights") {
      spec.weights.clear();
      std::istringstream vs(value);
      std::string item;
      while (std::getline(vs, item, ',')) spec.weights.push_back(std::stod(item));
    } else if (key == "shape") {
      if (value == "ramp") spec.shape = ModeShape::kRamp;
      else if (value == "sine") spec.shape = ModeShape::kSine;
      else throw ConfigError("synth-data", "unknown mode shape '" + value + "'");
    } else if (key == "amplitude") {
      spec.amplitude = std::stod(value);
    } else if (key == "noise_std") {
      spec.noise_std = std::stod(value);
    } else if (key == "history_amplitude") {
      spec.history_amplitude = std::stod(value);
    } else if (key == "history_period") {
      spec.history_period = std::stoul(value);
    } else if (key == "channels") {
      spec.channels = std::stoul(value);
    } else if (key == "conditional_weights") {
      spec.conditional_weights = value == "true";
    } else if (key == "threshold") {
      spec.threshold = std::stod(value);
    } else if (key == "context" || key == "horizon" || key == "windows" || key == "seed") {
      // recorded by write_dataset for provenance
    } else {
      throw ConfigError("synth-data", "unknown mixture key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

SynthDataset generate(const MixtureSpec& spec, std::size_t n_windows, std::size_t context, std::size_t horizon,
                      std::uint64_t seed) {
  spec.validate();
  if (context == 0 || horizon == 0) throw ConfigError("synth-data", "context and horizon must be positive");
  const std::size_t C = spec.channels, L = context + horizon;
  SynthDataset out;
  out.context = context;
  out.horizon = horizon;
  for (std::size_t c = 0; c < C; ++c) {
    out.series.names.push_back(C == 1 ? "value" : "ch" + std::to_string(c));
    out.series.columns.emplace_back(n_windows * L);
  }
  const double period = static_cast<double>(spec.history_period);
  for (std::size_t i = 0; i < n_windows; ++i) {
    Rng rng = Rng::stream(seed, i);
    Window w{Tensor({C, context}), Tensor({C, horizon}), i * L, 0};
    for (std::size_t c = 0; c < C; ++c) {
      const double phase = rng.uniform(0.0, period);
      for (std::size_t t = 0; t < context; ++t) {
        w.context[c * context + t] =
            spec.history_amplitude * std::sin(2.0 * std::numbers::pi * (static_cast<double>(t) + phase) / period) +
            spec.noise_std * rng.normal();
      }
    }
    const auto pi = spec.weights_for(w.context);
    const double u = rng.uniform();
    std::size_t mode = 0;
    double cum = pi[0];
    while (mode + 1 < pi.size() && u >= cum) cum += pi[++mode];
    w.label = static_cast<int>(mode);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t j = 0; j < horizon; ++j) {
        w.target[c * horizon + j] = spec.mode_value(mode, j, horizon) + spec.noise_std * rng.normal();
      }
    for (std::size_t c = 0; c < C; ++c) {
      auto& col = out.series.columns[c];
      for (std::size_t t = 0; t < context; ++t) col[i * L + t] = w.context[c * context + t];
      for (std::size_t j = 0; j < horizon; ++j) col[i * L + context + j] = w.target[c * horizon + j];
    }
    out.labels.push_back(LabelRow{i, i * L, w.label});
    out.windows.push_back(std::move(w));
  }
  return out;
}

void write_dataset(const SynthDataset& data, const MixtureSpec& spec, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_series_csv(data.series, (fs::path(dir) / "series.csv").string());
  write_labels_csv(data.labels, (fs::path(dir) / "labels.csv").string());
  std::ofstream os(fs::path(dir) / "mixture.txt");
  if (!os) throw IoError("synth-data", "cannot write mixture.txt in " + dir);
  os << spec.to_text() << "context = " << data.context << "\nhorizon = " << data.horizon
     << "\nwindows = " << data.windows.size() << '\n';
}

namespace {
double pointwise_error(const double* a, const double* b, std::size_t n, Criterion c) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += c == Criterion::kMse ? d * d : std::fabs(d);
  }
  return acc / static_cast<double>(n);
}
}  // namespace

ModeMetrics mode_metrics(const ModeMetricsInput& in) {
  if (in.expert_preds.empty()) throw DimensionError("synth-data", "mode metrics need at least one expert");
  const Shape& shape = in.targets.shape();
  if (shape.size() != 2) throw DimensionError("synth-data", "targets must be [N x H]");
  for (const auto& p : in.expert_preds) {
    if (p.shape() != shape) throw DimensionError("synth-data", "expert prediction shape " + shape_string(p.shape()));
  }
  const std::size_t N = shape[0], H = shape[1], E = in.expert_preds.size();
  Tensor mixture = in.mixture;
  if (mixture.empty()) {
    mixture = Tensor(shape, 0.0);
    for (const auto& p : in.expert_preds)
      for (std::size_t i = 0; i < mixture.size(); ++i) mixture[i] += p[i] / static_cast<double>(E);
  }
  if (mixture.shape() != shape) throw DimensionError("synth-data", "mixture shape " + shape_string(mixture.shape()));
  const bool with_mean = !in.cond_mean.empty();
  if (with_mean && in.cond_mean.shape() != shape) throw DimensionError("synth-data", "conditional mean shape mismatch");
  if (!in.labels.empty() && in.labels.size() != N) throw DimensionError("synth-data", "label count mismatch");

  ModeMetrics m;
  m.windows = N;
  std::map<int, std::pair<double, std::size_t>> by_mode;
  for (std::size_t n = 0; n < N; ++n) {
    const double* target = &in.targets[n * H];
    const double head = pointwise_error(&mixture[n * H], target, H, in.criterion);
    m.mean_head_error += head;
    double best = pointwise_error(&in.expert_preds[0][n * H], target, H, in.criterion);
    for (std::size_t e = 1; e < E; ++e) best = std::min(best, pointwise_error(&in.expert_preds[e][n * H], target, H, in.criterion));
    m.best_of_e_error += best;
    if (E > 1) {
      double pairs = 0.0;
      for (std::size_t a = 0; a < E; ++a)
        for (std::size_t b = a + 1; b < E; ++b) {
          double peak = 0.0;
          for (std::size_t t = 0; t < H; ++t) {
            peak = std::max(peak, std::fabs(in.expert_preds[a][n * H + t] - in.expert_preds[b][n * H + t]));
          }
          pairs += peak;
        }
      m.diversity += pairs / static_cast<double>(E * (E - 1) / 2);
    }
    if (with_mean) m.cond_mean_gap += pointwise_error(&mixture[n * H], &in.cond_mean[n * H], H, in.criterion);
    if (!in.labels.empty()) {
      auto& slot = by_mode[in.labels[n]];
      slot.first += head;
      slot.second += 1;
    }
  }
  const double inv = 1.0 / static_cast<double>(N);
  m.mean_head_error *= inv;
  m.best_of_e_error *= inv;
  m.diversity *= inv;
  m.cond_mean_gap *= inv;
  if (!by_mode.empty()) {
    m.per_mode_error.assign(static_cast<std::size_t>(by_mode.rbegin()->first + 1), 0.0);
    for (const auto& [mode, acc] : by_mode) {
      if (mode >= 0) m.per_mode_error[static_cast<std::size_t>(mode)] = acc.first / static_cast<double>(acc.second);
    }
  }
  return m;
}

}  // namespace segcast
