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

#include "segcast/model.hpp"

#include <cmath>

#include "segcast/errors.hpp"
#include "segcast/rng.hpp"

namespace segcast {

NormStats norm_stats(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("training", "context must be [B x C x T], got " + shape_string(x.shape()));
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2);
  if (T < 2) throw DimensionError("training", "normalization needs at least two context steps");
  NormStats st{Tensor({B, C}), Tensor({B, C})};
  for (std::size_t r = 0; r < B * C; ++r) {
    const double* row = &x[r * T];
    double m = 0.0;
    for (std::size_t t = 0; t < T; ++t) m += row[t];
    m /= static_cast<double>(T);
    double v = 0.0;
    for (std::size_t t = 0; t < T; ++t) v += (row[t] - m) * (row[t] - m);
    st.mean[r] = m;
    st.std[r] = std::sqrt(v / static_cast<double>(T)) + kNormEps;
  }
  return st;
}

Tensor normalize(const Tensor& x, const NormStats& st) {
  Tensor out = x;
  const std::size_t rows = st.mean.size(), len = x.size() / rows;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < len; ++t) out[r * len + t] = (x[r * len + t] - st.mean[r]) / st.std[r];
  return out;
}

Tensor denormalize(const Tensor& y, const NormStats& st) {
  Tensor out = y;
  const std::size_t rows = st.mean.size(), len = y.size() / rows;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < len; ++t) out[r * len + t] = y[r * len + t] * st.std[r] + st.mean[r];
  return out;
}

LossBreakdown total_loss(double l_pred, double l_aux, double l_budget, double l_reg, bool use_reg) {
  LossBreakdown b{l_pred, l_aux, l_budget, use_reg ? l_reg : 0.0, 0.0};
  b.total = ((b.l_pred + b.l_aux) + b.l_budget) + b.l_reg;
  return b;
}

LossBreakdown LossTerms::values() const {
  return LossBreakdown{pred.item(), aux.item(), budget.item(), reg.item(), total.item()};
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)), store_(std::make_unique<ParameterStore>()) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const std::size_t K = cfg_.segments();
  patch_.emplace(PatchConfig{cfg_.patch_sizes, cfg_.hidden}, cfg_.context, *store_, rng);
  encoder_.emplace(EncoderConfig{cfg_.hidden, cfg_.layers, cfg_.heads}, *store_, rng);
  exo_.emplace(K, cfg_.n_exo, cfg_.hidden, *store_, rng);
  const std::size_t d = cfg_.head_input();
  for (std::size_t k = 0; k < K; ++k) {
    const std::string prefix = "head." + std::to_string(k);
    if (cfg_.head == HeadKind::kSage) {
      sage_.emplace_back(SageConfig{cfg_.experts, cfg_.top_k, cfg_.segment_len, d, cfg_.lambda_aux}, *store_, rng,
                         prefix);
    } else {
      linear_.emplace_back(cfg_.segment_len, d, *store_, rng, prefix);
    }
  }
  if (cfg_.refine_mode == RefineMode::kScrn) scrn_.emplace(K, cfg_.segment_len, cfg_.scrn_alpha_init, *store_, rng);
  if (cfg_.refine_mode == RefineMode::kScad)
    scad_.emplace(K, cfg_.segment_len, cfg_.scad_width, cfg_.scad_heads, *store_, rng);
}

std::vector<ad::Var> Model::head_inputs(ad::Graph& g, const EncoderState& state) const {
  const Shape& s = state.hidden.shape();
  const std::size_t N = s[0] * s[1], D = s[2], P = s[3];
  const ad::Var h = ad::reshape(state.hidden, {N, D, P});
  std::vector<ad::Var> z;
  for (std::size_t k = 0; k < cfg_.segments(); ++k) {
    const ad::Var aug = exo_->augment(g, h, k);
    z.push_back(ad::reshape(aug, {N, aug.dim(1) * aug.dim(2)}));
  }
  return z;
}

std::vector<ad::Var> Model::refine(ad::Graph& g, const std::vector<ad::Var>& raw) const {
  if (scrn_) return scrn_->refine(g, raw);
  if (scad_) return scad_->refine(g, raw);
  return raw;
}

Forecast Model::forward(ad::Graph& g, const Tensor& context, bool hard_select) const {
  if (context.rank() != 3 || context.dim(2) != cfg_.context) {
    throw DimensionError("training", "expected context [B x C x " + std::to_string(cfg_.context) + "], got " +
                                         shape_string(context.shape()));
  }
  const std::size_t B = context.dim(0), C = context.dim(1), S = cfg_.segment_len;
  Forecast f;
  const PatchEmbedding emb = patch_->embed(g, g.constant(context), hard_select);
  f.selection = emb.selection;
  f.state = encoder_->encode(g, emb.tokens);
  const auto z = head_inputs(g, f.state);
  for (std::size_t k = 0; k < z.size(); ++k) {
    ad::Var y;
    if (cfg_.head == HeadKind::kSage) {
      f.gates.push_back(sage_[k].route(g, z[k]));
      y = sage_[k].predict(g, z[k], f.gates.back());
    } else {
      y = linear_[k].predict(g, z[k]);
    }
    f.raw_segments.push_back(ad::reshape(y, {B, C, S}));
  }
  f.segments = refine(g, f.raw_segments);
  f.prediction = f.segments.size() == 1 ? f.segments[0] : ad::concat(f.segments, 2);
  return f;
}

LossTerms Model::losses(ad::Graph& g, const Forecast& f, const Tensor& target) const {
  const std::size_t B = f.prediction.dim(0), C = f.prediction.dim(1), S = cfg_.segment_len;
  if (target.shape() != f.prediction.shape()) {
    throw DimensionError("training", "target " + shape_string(target.shape()) + " does not match forecast " +
                                         shape_string(f.prediction.shape()));
  }
  const double inv_k = 1.0 / static_cast<double>(f.segments.size());
  const ad::Var y = g.constant(target);
  LossTerms t;
  std::vector<ad::Var> seg_losses, aux;
  for (std::size_t k = 0; k < f.segments.size(); ++k) {
    const ad::Var pred = ad::reshape(f.segments[k], {B * C, S});
    const ad::Var truth = ad::reshape(ad::slice(y, 2, k * S, S), {B * C, S});
    seg_losses.push_back(segment_loss(pred, truth, cfg_.criterion));
    if (!f.gates.empty()) aux.push_back(aux_loss(f.gates[k], cfg_.lambda_aux));
  }
  auto averaged = [&](const std::vector<ad::Var>& parts) {
    ad::Var acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = ad::add(acc, parts[i]);
    return ad::scale(acc, inv_k);
  };
  t.pred = averaged(seg_losses);
  t.aux = aux.empty() ? g.constant(Tensor::scalar(0.0)) : averaged(aux);
  t.budget = budget_loss(f.selection, cfg_.lambda_budget);
  t.reg = scrn_ && cfg_.use_reg ? scrn_->reg(g, cfg_.lambda_reg) : g.constant(Tensor::scalar(0.0));
  t.total = ad::add(ad::add(ad::add(t.pred, t.aux), t.budget), t.reg);
  return t;
}

Tensor Model::predict(const Tensor& context) const {
  const NormStats st = norm_stats(context);
  ad::Graph g;
  const Forecast f = forward(g, normalize(context, st), cfg_.patch_hard_select);
  return denormalize(f.prediction.value(), st);
}

std::vector<Tensor> Model::expert_paths(const Tensor& context) const {
  if (cfg_.head == HeadKind::kLinear) return {predict(context)};
  const NormStats st = norm_stats(context);
  ad::Graph g;
  const std::size_t B = context.dim(0), C = context.dim(1), S = cfg_.segment_len;
  const PatchEmbedding emb = patch_->embed(g, g.constant(normalize(context, st)), cfg_.patch_hard_select);
  const auto z = head_inputs(g, encoder_->encode(g, emb.tokens));
  std::vector<std::vector<ad::Var>> raw(cfg_.experts);
  for (std::size_t k = 0; k < z.size(); ++k) {
    auto cand = sage_[k].expert_candidates(z[k].value());
    for (std::size_t e = 0; e < cfg_.experts; ++e) raw[e].push_back(g.constant(cand[e].reshaped({B, C, S})));
  }
  std::vector<Tensor> paths;
  for (std::size_t e = 0; e < cfg_.experts; ++e) {
    const auto refined = refine(g, raw[e]);
    const ad::Var full = refined.size() == 1 ? refined[0] : ad::concat(refined, 2);
    paths.push_back(denormalize(full.value(), st));
  }
  return paths;
}

Tensor Model::encode(const Tensor& context) const {
  const NormStats st = norm_stats(context);
  ad::Graph g;
  const PatchEmbedding emb = patch_->embed(g, g.constant(normalize(context, st)), cfg_.patch_hard_select);
  const Tensor& h = encoder_->encode(g, emb.tokens).hidden.value();
  return h.reshaped({h.dim(0) * h.dim(1), h.dim(2) * h.dim(3)});
}

Tensor stack_contexts(const std::vector<const Tensor*>& parts) {
  if (parts.empty()) throw DimensionError("training", "cannot stack an empty batch");
  const Shape& s = parts[0]->shape();
  Tensor out({parts.size(), s[0], s[1]});
  const std::size_t each = parts[0]->size();
  for (std::size_t b = 0; b < parts.size(); ++b) {
    if (parts[b]->shape() != s) throw DimensionError("training", "windows in a batch differ in shape");
    std::copy(parts[b]->storage().begin(), parts[b]->storage().end(), out.storage().begin() + b * each);
  }
  return out;
}

}  // namespace segcast
