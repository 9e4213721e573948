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
#include <vector>

#include "segcast/autodiff.hpp"
#include "segcast/parameters.hpp"
#include "segcast/rng.hpp"

namespace segcast {

struct EncoderConfig {
  std::size_t hidden = 64;
  std::size_t layers = 1;
  std::size_t heads = 8;

  void validate() const;
};

struct EncoderState {
  ad::Var hidden;                   // [B x C x D x P]
  std::vector<ad::Var> attention;   // per layer, [(B*C*heads) x P x P]
};

// Channel-independent pre-norm transformer encoder. Every (batch, channel)
// token sequence is processed on its own with full bidirectional attention:
//   x = x + MHA(LN(x));  x = x + W2 gelu(W1 LN(x))
class Encoder {
 public:
  Encoder(EncoderConfig cfg, ParameterStore& store, Rng& rng, std::string prefix = "enc");

  // tokens: [B x C x P x D]
  EncoderState encode(ad::Graph& g, ad::Var tokens) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  ad::Var param(ad::Graph& g, std::size_t layer, const std::string& name) const;

  EncoderConfig cfg_;
  ParameterStore* store_;
  std::string prefix_;
};

}  // namespace segcast
