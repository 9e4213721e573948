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

#include "segcast/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "segcast/errors.hpp"
#include "segcast/training.hpp"

namespace segcast {

std::vector<std::size_t> horizon_prefixes(std::size_t horizon) {
  std::vector<std::size_t> out;
  for (std::size_t h : {96, 192, 336, 720})
    if (h < horizon) out.push_back(h);
  out.push_back(horizon);
  return out;
}

EvalResult evaluate(const Model& model, const std::vector<Window>& windows, const MixtureSpec* mixture,
                    std::size_t batch) {
  if (windows.empty()) throw UsageError("cli", "no evaluation windows");
  const ModelConfig& cfg = model.config();
  const std::size_t N = windows.size(), C = windows[0].context.dim(0), H = cfg.horizon;
  const bool labelled = std::all_of(windows.begin(), windows.end(), [](const Window& w) { return w.label >= 0; });
  const std::size_t E = cfg.head == HeadKind::kSage ? cfg.experts : 1;

  EvalResult out;
  out.predictions = Tensor({N, C, H});
  std::vector<Tensor> paths(E, Tensor({N * C, H}));
  for (std::size_t start = 0; start < N; start += batch) {
    std::vector<std::size_t> ids;
    for (std::size_t i = start; i < std::min(N, start + batch); ++i) ids.push_back(i);
    const auto [ctx, tgt] = make_batch(windows, ids);
    const Tensor pred = model.predict(ctx);
    std::copy(pred.storage().begin(), pred.storage().end(), out.predictions.storage().begin() + start * C * H);
    if (labelled) {
      const auto expert = model.expert_paths(ctx);
      for (std::size_t e = 0; e < E; ++e)
        std::copy(expert[e].storage().begin(), expert[e].storage().end(), paths[e].storage().begin() + start * C * H);
    }
  }

  for (std::size_t h : horizon_prefixes(H)) {
    HorizonMetrics m{h, 0.0, 0.0};
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < h; ++t) {
          const double d = out.predictions[(n * C + c) * H + t] - windows[n].target[c * H + t];
          m.mse += d * d;
          m.mae += std::fabs(d);
        }
    const double count = static_cast<double>(N * C * h);
    m.mse /= count;
    m.mae /= count;
    out.horizons.push_back(m);
  }

  if (labelled) {
    ModeMetricsInput in;
    in.expert_preds = std::move(paths);
    in.mixture = out.predictions.reshaped({N * C, H});
    in.targets = Tensor({N * C, H});
    if (mixture) in.cond_mean = Tensor({N * C, H});
    for (std::size_t n = 0; n < N; ++n) {
      std::copy(windows[n].target.storage().begin(), windows[n].target.storage().end(),
                in.targets.storage().begin() + n * C * H);
      if (mixture) {
        const Tensor cm = mixture->conditional_mean(windows[n].context, H);
        std::copy(cm.storage().begin(), cm.storage().end(), in.cond_mean.storage().begin() + n * C * H);
      }
      for (std::size_t c = 0; c < C; ++c) in.labels.push_back(windows[n].label);
    }
    in.criterion = cfg.criterion;
    out.modes = mode_metrics(in);
  }
  return out;
}

void write_predictions_csv(const Tensor& p, std::ostream& os) {
  os << "window,channel,step,value\n";
  const std::size_t N = p.dim(0), C = p.dim(1), H = p.dim(2);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < H; ++t) os << n << ',' << c << ',' << t << ',' << format_double(p[(n * C + c) * H + t]) << '\n';
}

std::vector<std::pair<std::string, ModelConfig>> ablation_configs(const ModelConfig& base) {
  const std::size_t n_exo = base.n_exo > 0 ? base.n_exo : 2;
  auto variant = [&](HeadKind head, std::size_t exo, RefineMode refine) {
    ModelConfig c = base;
    c.head = head;
    c.n_exo = exo;
    c.refine_mode = refine;
    return c;
  };
  return {
      {"baseline", variant(HeadKind::kLinear, 0, RefineMode::kNone)},
      {"+LEV", variant(HeadKind::kLinear, n_exo, RefineMode::kNone)},
      {"+LEV+SAGE", variant(HeadKind::kSage, n_exo, RefineMode::kNone)},
      {"+SCRN", variant(HeadKind::kSage, n_exo, RefineMode::kScrn)},
      {"+SCAD", variant(HeadKind::kSage, n_exo, RefineMode::kScad)},
  };
}

std::vector<AblationRow> run_ablation(const ModelConfig& base, const std::vector<Window>& windows,
                                      double train_fraction) {
  const auto split = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(windows.size())));
  if (split == 0 || split >= windows.size()) throw UsageError("cli", "ablation needs windows on both sides of the split");
  const std::vector<Window> train_set(windows.begin(), windows.begin() + static_cast<std::ptrdiff_t>(split));
  const std::vector<Window> test_set(windows.begin() + static_cast<std::ptrdiff_t>(split), windows.end());
  std::vector<AblationRow> rows;
  for (const auto& [name, cfg] : ablation_configs(base)) {
    Model model(cfg);
    const TrainResult tr = train(model, train_set);
    const EvalResult ev = evaluate(model, test_set);
    AblationRow row{name, cfg, ev.horizons.back().mse, ev.horizons.back().mae,
                    tr.history.empty() ? 0.0 : tr.history.back().total, tr.steps, false};
    row.finite = std::isfinite(row.mse) && std::isfinite(row.mae) && std::isfinite(row.final_loss);
    for (const auto& b : tr.history) row.finite = row.finite && std::isfinite(b.total);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& os) {
  os << "config,mse,mae,final_loss,steps\n";
  for (const auto& r : rows) {
    os << r.name << ',' << format_double(r.mse) << ',' << format_double(r.mae) << ',' << format_double(r.final_loss)
       << ',' << r.steps << '\n';
  }
}

}  // namespace segcast
