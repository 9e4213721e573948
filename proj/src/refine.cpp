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

#include "segcast/refine.hpp"

#include <cmath>

#include "segcast/errors.hpp"

namespace segcast {

RefineMode parse_refine_mode(std::string_view text) {
  if (text == "none") return RefineMode::kNone;
  if (text == "scrn") return RefineMode::kScrn;
  if (text == "scad") return RefineMode::kScad;
  throw ConfigError("segment-refine", "unknown refine_mode '" + std::string(text) + "' (expected none, scrn, scad)");
}

const char* to_string(RefineMode mode) {
  switch (mode) {
    case RefineMode::kNone: return "none";
    case RefineMode::kScrn: return "scrn";
    case RefineMode::kScad: return "scad";
  }
  return "none";
}

namespace {
void check_segments(std::span<const ad::Var> segments) {
  if (segments.empty()) throw DimensionError("segment-refine", "no segments to refine");
  for (const auto& s : segments) {
    if (s.shape() != segments[0].shape() || s.value().rank() != 3) {
      throw DimensionError("segment-refine", "segment shape " + shape_string(s.shape()) + " differs from " +
                                                 shape_string(segments[0].shape()));
    }
  }
}
}  // namespace

std::vector<ad::Var> scrn_refine(std::span<const ad::Var> segments, std::span<const ad::Var> embeddings,
                                 ad::Var alpha) {
  check_segments(segments);
  ad::Graph& g = *segments[0].graph;
  ad::Graph::Scope scope(g, "segment-refine");
  const std::size_t S = segments[0].dim(2);
  if (embeddings.size() + 1 < segments.size()) {
    throw DimensionError("segment-refine", std::to_string(embeddings.size()) + " embeddings for " +
                                               std::to_string(segments.size()) + " segments");
  }
  if (alpha.value().size() != 1) throw DimensionError("segment-refine", "alpha must be a scalar");
  std::vector<ad::Var> out{segments[0]};
  for (std::size_t s = 1; s < segments.size(); ++s) {
    if (embeddings[s - 1].shape() != Shape{S}) {
      throw DimensionError("segment-refine", "embedding " + std::to_string(s) + " has shape " +
                                                 shape_string(embeddings[s - 1].shape()));
    }
    const ad::Var noise = ad::mul(segments[s - 1], embeddings[s - 1]);
    out.push_back(ad::add(segments[s], ad::mul(noise, alpha)));
  }
  return out;
}

ad::Var scrn_reg(ad::Graph& g, std::span<const ad::Var> embeddings, double lambda) {
  ad::Graph::Scope scope(g, "segment-refine");
  if (embeddings.empty()) return g.constant(Tensor::scalar(0.0));
  std::size_t entries = 0;
  ad::Var total;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const ad::Var sq = ad::sum(ad::square(embeddings[i]));
    total = i == 0 ? sq : ad::add(total, sq);
    entries += embeddings[i].value().size();
  }
  return ad::scale(total, lambda / static_cast<double>(entries));
}

Scrn::Scrn(std::size_t segments, std::size_t seg_len, double alpha_init, ParameterStore& store, Rng& rng,
           std::string prefix)
    : segments_(segments), store_(&store), prefix_(std::move(prefix)) {
  const double bound = std::sqrt(6.0 / static_cast<double>(seg_len)) * 0.01;
  for (std::size_t s = 1; s < segments_; ++s) store.add_uniform(prefix_ + ".e." + std::to_string(s), {seg_len}, bound, rng);
  store.add(prefix_ + ".alpha", Tensor::scalar(alpha_init));
}

std::vector<ad::Var> Scrn::embeddings(ad::Graph& g) const {
  std::vector<ad::Var> e;
  for (std::size_t s = 1; s < segments_; ++s) e.push_back(g.param(store_->get(prefix_ + ".e." + std::to_string(s))));
  return e;
}

std::vector<ad::Var> Scrn::refine(ad::Graph& g, std::span<const ad::Var> segments) const {
  if (segments.size() != segments_) {
    throw DimensionError("segment-refine", "expected " + std::to_string(segments_) + " segments, got " +
                                               std::to_string(segments.size()));
  }
  const auto e = embeddings(g);
  return scrn_refine(segments, e, g.param(store_->get(prefix_ + ".alpha")));
}

ad::Var Scrn::reg(ad::Graph& g, double lambda) const {
  const auto e = embeddings(g);
  return scrn_reg(g, e, lambda);
}

Scad::Scad(std::size_t segments, std::size_t seg_len, std::size_t width, std::size_t heads, ParameterStore& store,
           Rng& rng, std::string prefix)
    : segments_(segments), seg_len_(seg_len), width_(width), heads_(heads), store_(&store), prefix_(std::move(prefix)) {
  if (width_ == 0 || heads_ == 0 || width_ % heads_ != 0) {
    throw ConfigError("segment-refine", "scad width " + std::to_string(width_) + " not divisible by " +
                                            std::to_string(heads_) + " heads");
  }
  for (std::size_t s = 1; s < segments_; ++s) {
    store.add_uniform(param_name(s, "embed"), {width_}, 1.0, rng);
    store.add_uniform(param_name(s, "pos"), {seg_len_, width_}, 0.02, rng);
    for (const char* w : {"wq", "wk", "wv"}) store.add_xavier(param_name(s, w), {width_, width_}, width_, width_, rng);
    store.add_xavier(param_name(s, "wo"), {1, width_}, width_, 1, rng);
    store.add(param_name(s, "bo"), Tensor({1}, 0.0));
  }
}

std::string Scad::param_name(std::size_t segment, const std::string& what) const {
  return prefix_ + "." + std::to_string(segment) + "." + what;
}

std::vector<ad::Var> Scad::refine(ad::Graph& g, std::span<const ad::Var> segments) const {
  check_segments(segments);
  ad::Graph::Scope scope(g, "segment-refine");
  if (segments.size() != segments_ || segments[0].dim(2) != seg_len_) {
    throw DimensionError("segment-refine", "scad configured for " + std::to_string(segments_) + " segments of " +
                                               std::to_string(seg_len_) + ", got " + std::to_string(segments.size()) +
                                               " of shape " + shape_string(segments[0].shape()));
  }
  const std::size_t B = segments[0].dim(0), C = segments[0].dim(1), S = seg_len_, N = B * C;
  const std::size_t w = width_, H = heads_, dh = w / H;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<ad::Var> out{segments[0]};
  for (std::size_t s = 1; s < segments.size(); ++s) {
    auto p = [&](const char* what) { return g.param(store_->get(param_name(s, what))); };
    const ad::Var embed = p("embed");
    const ad::Var pos = p("pos");
    // Each time step is a token: value * embed + positional vector -> [N*S x w]
    auto tokens = [&](ad::Var seg) {
      return ad::reshape(ad::add(ad::mul(ad::reshape(seg, {N, S, 1}), embed), pos), {N * S, w});
    };
    auto split_heads = [&](ad::Var t) {
      return ad::reshape(ad::permute(ad::reshape(t, {N, S, H, dh}), {0, 2, 1, 3}), {N * H, S, dh});
    };
    const ad::Var query = tokens(segments[s]);
    const ad::Var memory = tokens(segments[s - 1]);
    const ad::Var q = split_heads(ad::linear(query, p("wq")));
    const ad::Var k = split_heads(ad::linear(memory, p("wk")));
    const ad::Var v = split_heads(ad::linear(memory, p("wv")));
    const ad::Var attn = ad::softmax(ad::scale(ad::bmm(q, k, true), inv_sqrt_dh), 2);
    ad::Var ctx = ad::bmm(attn, v);
    ctx = ad::reshape(ad::permute(ad::reshape(ctx, {N, H, S, dh}), {0, 2, 1, 3}), {N * S, w});
    const ad::Var delta = ad::reshape(ad::linear(ctx, p("wo"), p("bo")), {B, C, S});
    out.push_back(ad::add(segments[s], delta));
  }
  return out;
}

}  // namespace segcast
