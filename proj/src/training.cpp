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

#include "segcast/training.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "segcast/errors.hpp"
#include "segcast/rng.hpp"

namespace segcast {

Adam::Adam(ParameterStore& store, double lr, double beta1, double beta2, double eps)
    : store_(&store), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : store) {
    m_.emplace_back(p.value.shape(), 0.0);
    v_.emplace_back(p.value.shape(), 0.0);
  }
}

void Adam::step() {
  for (const auto& p : *store_) {
    if (!p.grad.all_finite()) throw NumericError("training", "gradient of '" + p.name + "' is not finite");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t i = 0;
  for (auto& p : *store_) {
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double gj = p.grad[j];
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * gj;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
      p.value[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
    ++i;
  }
}

void write_metrics_row(std::ostream& os, std::size_t step, const LossBreakdown& b) {
  os << step << ',' << format_double(b.l_pred) << ',' << format_double(b.l_aux) << ',' << format_double(b.l_budget)
     << ',' << format_double(b.l_reg) << ',' << format_double(b.total) << '\n';
}

std::pair<Tensor, Tensor> make_batch(const std::vector<Window>& windows, const std::vector<std::size_t>& ids) {
  std::vector<const Tensor*> ctx, tgt;
  for (std::size_t id : ids) {
    ctx.push_back(&windows.at(id).context);
    tgt.push_back(&windows.at(id).target);
  }
  return {stack_contexts(ctx), stack_contexts(tgt)};
}

TrainResult train(Model& model, const std::vector<Window>& windows, std::ostream* metrics) {
  const ModelConfig& cfg = model.config();
  if (windows.empty()) throw UsageError("training", "no training windows");
  for (const auto& w : windows) {
    if (w.context.dim(1) != cfg.context || w.target.dim(1) != cfg.horizon) {
      throw DimensionError("training", "window " + shape_string(w.context.shape()) + " -> " +
                                           shape_string(w.target.shape()) + " does not match context " +
                                           std::to_string(cfg.context) + " and horizon " +
                                           std::to_string(cfg.horizon));
    }
  }
  if (metrics) *metrics << kMetricsHeader << '\n';
  Adam opt(model.params(), cfg.lr);
  Rng shuffler = Rng::stream(cfg.seed, 0x5eed);
  std::vector<std::size_t> order(windows.size());
  TrainResult result;
  const std::size_t batch = std::min(cfg.batch_size, windows.size());
  const bool capped = cfg.max_steps > 0;
  for (std::size_t epoch = 0; capped || epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffler.shuffle(order);
    for (std::size_t start = 0; start + batch <= order.size(); start += batch) {
      if (capped && result.steps >= cfg.max_steps) return result;
      const std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(start + batch));
      auto [ctx, tgt] = make_batch(windows, ids);
      const NormStats st = norm_stats(ctx);
      ad::Graph g;
      model.params().zero_grad();
      LossBreakdown b;
      try {
        const Forecast f = model.forward(g, normalize(ctx, st));
        const LossTerms terms = model.losses(g, f, normalize(tgt, st));
        b = terms.values();
        g.backward(terms.total);
        opt.step();
      } catch (const NumericError& e) {
        throw NumericError(e.module(), "step " + std::to_string(result.steps) + ": " + e.detail());
      }
      ++result.steps;
      result.history.push_back(b);
      if (metrics) write_metrics_row(*metrics, result.steps, b);
    }
    if (capped && result.steps >= cfg.max_steps) break;
  }
  return result;
}

}  // namespace segcast
