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

#include <string>

#include "segcast/autodiff.hpp"
#include "segcast/parameters.hpp"
#include "segcast/rng.hpp"

namespace segcast {

// Appends the rows of bank [N_exo x D] as extra tokens to every instance of
// h [N x D x P], giving [N x D x (P + N_exo)].
ad::Var augment(ad::Var h, ad::Var bank);

// Learnable exogenous vectors: one bank of `count` D-dimensional vectors per
// forecast segment, shared across batch and channels.
class ExoBank {
 public:
  ExoBank(std::size_t segments, std::size_t count, std::size_t hidden, ParameterStore& store, Rng& rng,
          std::string prefix = "lev");

  // Identity when count == 0. Throws ConfigError for an unknown segment.
  ad::Var augment(ad::Graph& g, ad::Var h, std::size_t segment) const;

  std::size_t count() const { return count_; }
  std::size_t segments() const { return segments_; }
  std::string name(std::size_t segment) const { return prefix_ + "." + std::to_string(segment); }

 private:
  std::size_t segments_;
  std::size_t count_;
  std::size_t hidden_;
  ParameterStore* store_;
  std::string prefix_;
};

}  // namespace segcast
