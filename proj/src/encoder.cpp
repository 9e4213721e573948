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

#include "segcast/encoder.hpp"

#include <cmath>

#include "segcast/errors.hpp"

namespace segcast {

void EncoderConfig::validate() const {
  if (hidden == 0) throw ConfigError("encoder", "hidden size must be positive");
  if (heads == 0 || hidden % heads != 0) {
    throw ConfigError("encoder", "hidden " + std::to_string(hidden) + " is not divisible by " + std::to_string(heads) +
                                     " heads");
  }
}

Encoder::Encoder(EncoderConfig cfg, ParameterStore& store, Rng& rng, std::string prefix)
    : cfg_(cfg), store_(&store), prefix_(std::move(prefix)) {
  cfg_.validate();
  const std::size_t D = cfg_.hidden, F = 4 * cfg_.hidden;
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string base = prefix_ + "." + std::to_string(l) + ".";
    store.add(base + "ln1.g", Tensor({D}, 1.0));
    store.add(base + "ln1.b", Tensor({D}, 0.0));
    for (const char* name : {"wq", "wk", "wv", "wo"}) {
      store.add_xavier(base + "attn." + name, {D, D}, D, D, rng);
      store.add(base + "attn.b" + std::string(name + 1), Tensor({D}, 0.0));
    }
    store.add(base + "ln2.g", Tensor({D}, 1.0));
    store.add(base + "ln2.b", Tensor({D}, 0.0));
    store.add_xavier(base + "ff.w1", {F, D}, D, F, rng);
    store.add(base + "ff.b1", Tensor({F}, 0.0));
    store.add_xavier(base + "ff.w2", {D, F}, F, D, rng);
    store.add(base + "ff.b2", Tensor({D}, 0.0));
  }
}

ad::Var Encoder::param(ad::Graph& g, std::size_t layer, const std::string& name) const {
  return g.param(store_->get(prefix_ + "." + std::to_string(layer) + "." + name));
}

EncoderState Encoder::encode(ad::Graph& g, ad::Var tokens) const {
  ad::Graph::Scope scope(g, "encoder");
  const Shape& s = tokens.shape();
  if (s.size() != 4 || s[3] != cfg_.hidden) {
    throw DimensionError("encoder", "expected tokens [B x C x P x " + std::to_string(cfg_.hidden) + "], got " +
                                        shape_string(s));
  }
  const std::size_t B = s[0], C = s[1], P = s[2], D = s[3];
  const std::size_t N = B * C, H = cfg_.heads, dh = D / H;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  EncoderState state;
  ad::Var x = ad::reshape(tokens, {N * P, D});
  // [N*P x D] -> [(N*H) x P x dh]
  auto split_heads = [&](ad::Var t) {
    return ad::reshape(ad::permute(ad::reshape(t, {N, P, H, dh}), {0, 2, 1, 3}), {N * H, P, dh});
  };
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    ad::Var h = ad::layer_norm(x, param(g, l, "ln1.g"), param(g, l, "ln1.b"));
    ad::Var q = split_heads(ad::linear(h, param(g, l, "attn.wq"), param(g, l, "attn.bq")));
    ad::Var k = split_heads(ad::linear(h, param(g, l, "attn.wk"), param(g, l, "attn.bk")));
    ad::Var v = split_heads(ad::linear(h, param(g, l, "attn.wv"), param(g, l, "attn.bv")));
    ad::Var attn = ad::softmax(ad::scale(ad::bmm(q, k, true), inv_sqrt_dh), 2);
    state.attention.push_back(attn);
    ad::Var ctx = ad::bmm(attn, v);
    ctx = ad::reshape(ad::permute(ad::reshape(ctx, {N, H, P, dh}), {0, 2, 1, 3}), {N * P, D});
    x = ad::add(x, ad::linear(ctx, param(g, l, "attn.wo"), param(g, l, "attn.bo")));

    ad::Var f = ad::layer_norm(x, param(g, l, "ln2.g"), param(g, l, "ln2.b"));
    f = ad::gelu(ad::linear(f, param(g, l, "ff.w1"), param(g, l, "ff.b1")));
    x = ad::add(x, ad::linear(f, param(g, l, "ff.w2"), param(g, l, "ff.b2")));
  }
  state.hidden = ad::permute(ad::reshape(x, {B, C, P, D}), {0, 1, 3, 2});
  return state;
}

}  // namespace segcast
