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

#include "segcast/refine.hpp"
#include "segcast/sage.hpp"

namespace segcast {

enum class HeadKind { kSage, kLinear };

HeadKind parse_head_kind(std::string_view text);
const char* to_string(HeadKind kind);

// Every hyperparameter of a model and its training run. Serialized as a flat
// "key = value" file; '#' starts a comment; unknown or repeated keys are errors.
struct ModelConfig {
  std::size_t context = 512;
  std::size_t horizon = 96;
  std::size_t segment_len = 48;

  std::vector<std::size_t> patch_sizes{8, 16, 32, 64};
  bool patch_hard_select = false;

  std::size_t hidden = 64;
  std::size_t layers = 1;
  std::size_t heads = 8;

  HeadKind head = HeadKind::kSage;
  std::size_t experts = 8;
  std::size_t top_k = 4;
  std::size_t n_exo = 2;

  RefineMode refine_mode = RefineMode::kScrn;
  double scrn_alpha_init = 0.01;
  std::size_t scad_width = 8;
  std::size_t scad_heads = 2;

  Criterion criterion = Criterion::kMse;
  double lambda_aux = 0.01;
  double lambda_budget = 0.01;
  double lambda_reg = 1e-4;
  bool use_reg = true;

  std::uint64_t seed = 42;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::size_t max_steps = 0;  // 0: no cap beyond epochs

  std::size_t segments() const { return segment_len == 0 ? 0 : horizon / segment_len; }
  std::size_t tokens() const { return patch_sizes.empty() ? 0 : context / patch_sizes.back(); }
  // Flattened head input width D * (P + N_exo).
  std::size_t head_input() const { return hidden * (tokens() + n_exo); }

  // Throws ConfigError naming the offending key.
  void validate() const;

  std::string to_text() const;
  static ModelConfig parse(const std::string& text);
  static ModelConfig load(const std::string& path);
  // Applies "key=value" overrides on top of this config.
  void set(const std::string& key, const std::string& value);
};

// Documented keys, in to_text() order.
const std::vector<std::string>& config_keys();

}  // namespace segcast
