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

#include "segcast/sage.hpp"

#include <cmath>

#include "segcast/errors.hpp"

namespace segcast {

Criterion parse_criterion(std::string_view text) {
  if (text == "mse") return Criterion::kMse;
  if (text == "mae") return Criterion::kMae;
  throw ConfigError("sage-heads", "unknown criterion '" + std::string(text) + "' (expected mse or mae)");
}

const char* to_string(Criterion c) { return c == Criterion::kMse ? "mse" : "mae"; }

void SageConfig::validate() const {
  if (experts == 0) throw ConfigError("sage-heads", "need at least one expert");
  if (top_k < 1 || top_k > experts) {
    throw ParameterError("sage-heads", "top_k " + std::to_string(top_k) + " out of range [1, " +
                                           std::to_string(experts) + "]");
  }
  if (seg_len == 0 || input_dim == 0) throw ConfigError("sage-heads", "segment length and input dim must be positive");
}

GateDecision route(ad::Var z, ad::Var w_gate, std::size_t k) {
  ad::Graph& g = *z.graph;
  ad::Graph::Scope scope(g, "sage-heads");
  if (w_gate.value().rank() != 2 || k < 1 || k > w_gate.dim(0)) {
    throw ParameterError("sage-heads", "top_k " + std::to_string(k) + " invalid for gate " +
                                           shape_string(w_gate.shape()));
  }
  ad::Var scores = ad::softmax(ad::linear(z, w_gate), 1);
  ad::TopK top = ad::topk_mask(scores, k);
  return GateDecision{scores, top.gate, k, std::move(top.indices)};
}

ad::Var predict_segment(ad::Var z, const GateDecision& gate, const ExpertWeights& weights) {
  ad::Graph& g = *z.graph;
  ad::Graph::Scope scope(g, "sage-heads");
  const std::size_t E = weights.w.size();
  if (z.value().rank() != 2 || E == 0 || weights.b.size() != E) {
    throw DimensionError("sage-heads", "bad expert inputs for z " + shape_string(z.shape()));
  }
  const std::size_t N = z.dim(0), d = z.dim(1), S = weights.w[0].dim(0), k = gate.k;
  if (gate.gate.shape() != Shape{N, E}) {
    throw DimensionError("sage-heads", "gate " + shape_string(gate.gate.shape()) + " does not match N=" +
                                           std::to_string(N) + ", E=" + std::to_string(E));
  }
  for (std::size_t e = 0; e < E; ++e) {
    if (weights.w[e].shape() != Shape{S, d} || weights.b[e].shape() != Shape{S}) {
      throw DimensionError("sage-heads", "expert " + std::to_string(e) + " weights do not match [" +
                                             std::to_string(S) + " x " + std::to_string(d) + "]");
    }
  }

  const auto& Z = z.value();
  const auto& G = gate.gate.value();
  const auto& idx = gate.indices;
  Tensor Y({N, S}, 0.0);
  // Expert outputs of the retained experts, cached for the gate gradient.
  std::vector<double> expert_out(N * k * S);
  for (std::size_t n = 0; n < N; ++n) {
    const double* zn = &Z[n * d];
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t e = idx[n * k + j];
      const auto& W = weights.w[e].value();
      const auto& b = weights.b[e].value();
      const double gne = G[n * E + e];
      for (std::size_t s = 0; s < S; ++s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += W[s * d + i] * zn[i];
        const double y = acc + b[s];
        expert_out[(n * k + j) * S + s] = y;
        Y[n * S + s] += gne * y;
      }
    }
  }
  std::vector<std::size_t> parents{z.id, gate.gate.id};
  std::vector<std::size_t> wid, bid;
  for (std::size_t e = 0; e < E; ++e) {
    parents.push_back(weights.w[e].id);
    wid.push_back(weights.w[e].id);
  }
  for (std::size_t e = 0; e < E; ++e) {
    parents.push_back(weights.b[e].id);
    bid.push_back(weights.b[e].id);
  }
  const std::size_t iz = z.id, ig = gate.gate.id;
  ad::Var mixture = g.record(
      "sage_mixture", std::move(Y), std::move(parents),
      [iz, ig, wid, bid, idx, expert_out = std::move(expert_out), N, d, S, E, k](ad::Graph& g, std::size_t self) {
        const auto& dY = g.upstream(self);
        const auto& Z = g.value(iz);
        const auto& G = g.value(ig);
        Tensor* dZ = g.requires_grad(iz) ? &g.grad_acc(iz) : nullptr;
        Tensor* dG = g.requires_grad(ig) ? &g.grad_acc(ig) : nullptr;
        for (std::size_t n = 0; n < N; ++n) {
          const double* zn = &Z[n * d];
          const double* dy = &dY[n * S];
          for (std::size_t j = 0; j < k; ++j) {
            const std::size_t e = idx[n * k + j];
            const double gne = G[n * E + e];
            if (dG) {
              double acc = 0.0;
              for (std::size_t s = 0; s < S; ++s) acc += dy[s] * expert_out[(n * k + j) * S + s];
              (*dG)[n * E + e] += acc;
            }
            const auto& W = g.value(wid[e]);
            Tensor* dW = g.requires_grad(wid[e]) ? &g.grad_acc(wid[e]) : nullptr;
            Tensor* dB = g.requires_grad(bid[e]) ? &g.grad_acc(bid[e]) : nullptr;
            for (std::size_t s = 0; s < S; ++s) {
              const double gd = gne * dy[s];
              if (gd == 0.0) continue;
              if (dB) (*dB)[s] += gd;
              for (std::size_t i = 0; i < d; ++i) {
                if (dW) (*dW)[s * d + i] += gd * zn[i];
                if (dZ) (*dZ)[n * d + i] += gd * W[s * d + i];
              }
            }
          }
        }
      });

  const ad::Var shared_gate = ad::sigmoid(ad::linear(z, ad::reshape(weights.shared_gate, {1, d})));
  const ad::Var shared = ad::mul(shared_gate, ad::linear(z, weights.shared_w));
  return ad::add(mixture, shared);
}

ad::Var aux_loss(const GateDecision& gate, double lambda) {
  ad::Graph& g = *gate.scores.graph;
  ad::Graph::Scope scope(g, "sage-heads");
  const std::size_t N = gate.scores.dim(0), E = gate.scores.dim(1);
  Tensor freq({1, E}, 0.0);
  for (auto e : gate.indices) freq[e] += 1.0;
  for (auto& f : freq.data()) f /= static_cast<double>(N);
  // sum_e r_e f_e = (1/N) sum_{n,e} s_{n,e} f_e
  const ad::Var weighted = ad::sum(ad::mul(gate.scores, g.constant(std::move(freq))));
  return ad::scale(weighted, lambda * static_cast<double>(E) / static_cast<double>(N));
}

ad::Var segment_loss(ad::Var pred, ad::Var target, Criterion criterion) {
  ad::Graph::Scope scope(*pred.graph, "sage-heads");
  return criterion == Criterion::kMse ? ad::mse_loss(pred, target) : ad::mae_loss(pred, target);
}

SageHead::SageHead(SageConfig cfg, ParameterStore& store, Rng& rng, std::string prefix)
    : cfg_(cfg), store_(&store), prefix_(std::move(prefix)) {
  cfg_.validate();
  const std::size_t E = cfg_.experts, S = cfg_.seg_len, d = cfg_.input_dim;
  store.add_xavier(prefix_ + ".gate.w", {E, d}, d, E, rng);
  for (std::size_t e = 0; e < E; ++e) {
    store.add_xavier(prefix_ + ".expert." + std::to_string(e) + ".w", {S, d}, d, S, rng);
    store.add(prefix_ + ".expert." + std::to_string(e) + ".b", Tensor({S}, 0.0));
  }
  store.add_xavier(prefix_ + ".shared.w", {S, d}, d, S, rng);
  store.add_xavier(prefix_ + ".shared.gate", {d}, d, 1, rng);
}

ExpertWeights SageHead::bind(ad::Graph& g) const {
  ExpertWeights w;
  for (std::size_t e = 0; e < cfg_.experts; ++e) {
    w.w.push_back(g.param(store_->get(prefix_ + ".expert." + std::to_string(e) + ".w")));
    w.b.push_back(g.param(store_->get(prefix_ + ".expert." + std::to_string(e) + ".b")));
  }
  w.shared_w = g.param(store_->get(prefix_ + ".shared.w"));
  w.shared_gate = g.param(store_->get(prefix_ + ".shared.gate"));
  return w;
}

GateDecision SageHead::route(ad::Graph& g, ad::Var z) const {
  return segcast::route(z, g.param(store_->get(prefix_ + ".gate.w")), cfg_.top_k);
}

ad::Var SageHead::predict(ad::Graph& g, ad::Var z, const GateDecision& gate) const {
  return predict_segment(z, gate, bind(g));
}

std::vector<Tensor> SageHead::expert_candidates(const Tensor& z) const {
  const std::size_t N = z.dim(0), d = z.dim(1), S = cfg_.seg_len;
  const auto& Ws = store_->get(prefix_ + ".shared.w").value;
  const auto& ws = store_->get(prefix_ + ".shared.gate").value;
  std::vector<double> shared(N * S);
  for (std::size_t n = 0; n < N; ++n) {
    double logit = 0.0;
    for (std::size_t i = 0; i < d; ++i) logit += ws[i] * z[n * d + i];
    const double gate = 1.0 / (1.0 + std::exp(-logit));
    for (std::size_t s = 0; s < S; ++s) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) acc += Ws[s * d + i] * z[n * d + i];
      shared[n * S + s] = gate * acc;
    }
  }
  std::vector<Tensor> out;
  for (std::size_t e = 0; e < cfg_.experts; ++e) {
    const auto& W = store_->get(prefix_ + ".expert." + std::to_string(e) + ".w").value;
    const auto& b = store_->get(prefix_ + ".expert." + std::to_string(e) + ".b").value;
    Tensor y({N, S});
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t s = 0; s < S; ++s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += W[s * d + i] * z[n * d + i];
        y[n * S + s] = acc + b[s] + shared[n * S + s];
      }
    out.push_back(std::move(y));
  }
  return out;
}

LinearHead::LinearHead(std::size_t seg_len, std::size_t input_dim, ParameterStore& store, Rng& rng,
                       std::string prefix)
    : store_(&store), prefix_(std::move(prefix)) {
  store.add_xavier(prefix_ + ".linear.w", {seg_len, input_dim}, input_dim, seg_len, rng);
  store.add(prefix_ + ".linear.b", Tensor({seg_len}, 0.0));
}

ad::Var LinearHead::predict(ad::Graph& g, ad::Var z) const {
  ad::Graph::Scope scope(g, "sage-heads");
  return ad::linear(z, g.param(store_->get(prefix_ + ".linear.w")), g.param(store_->get(prefix_ + ".linear.b")));
}

}  // namespace segcast
