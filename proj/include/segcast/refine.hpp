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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segcast/autodiff.hpp"
#include "segcast/parameters.hpp"
#include "segcast/rng.hpp"

namespace segcast {

enum class RefineMode { kNone, kScrn, kScad };

RefineMode parse_refine_mode(std::string_view text);
const char* to_string(RefineMode mode);

// Causal residual refinement: segment 0 is untouched; segment s >= 1 becomes
// y_s + alpha * (y_{s-1} (.) e_s), using the raw predecessor. Each segment is
// [B x C x S]; embeddings[s - 1] is e_s with extent S; alpha has one element.
std::vector<ad::Var> scrn_refine(std::span<const ad::Var> segments, std::span<const ad::Var> embeddings,
                                 ad::Var alpha);

// lambda * (sum of squared embedding entries) / (number of entries).
ad::Var scrn_reg(ad::Graph& g, std::span<const ad::Var> embeddings, double lambda);

class Scrn {
 public:
  Scrn(std::size_t segments, std::size_t seg_len, double alpha_init, ParameterStore& store, Rng& rng,
       std::string prefix = "scrn");

  std::vector<ad::Var> refine(ad::Graph& g, std::span<const ad::Var> segments) const;
  ad::Var reg(ad::Graph& g, double lambda) const;

 private:
  std::vector<ad::Var> embeddings(ad::Graph& g) const;

  std::size_t segments_;
  ParameterStore* store_;
  std::string prefix_;
};

// Cross-attention refinement: every time step of segment s (s >= 1) is a
// query token attending over the time steps of raw segment s - 1; the
// projected attention output is added as a residual.
class Scad {
 public:
  Scad(std::size_t segments, std::size_t seg_len, std::size_t width, std::size_t heads, ParameterStore& store,
       Rng& rng, std::string prefix = "scad");

  std::vector<ad::Var> refine(ad::Graph& g, std::span<const ad::Var> segments) const;

  std::string param_name(std::size_t segment, const std::string& what) const;

 private:
  std::size_t segments_;
  std::size_t seg_len_;
  std::size_t width_;
  std::size_t heads_;
  ParameterStore* store_;
  std::string prefix_;
};

}  // namespace segcast
