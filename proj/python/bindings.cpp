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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "segcast/bench.hpp"
#include "segcast/cli.hpp"
#include "segcast/errors.hpp"
#include "segcast/evaluate.hpp"
#include "segcast/manifest.hpp"
#include "segcast/patch_embed.hpp"
#include "segcast/refine.hpp"
#include "segcast/sage.hpp"
#include "segcast/synth.hpp"
#include "segcast/training.hpp"

namespace py = pybind11;
using namespace segcast;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor from_numpy(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_numpy(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.storage().begin(), t.storage().end(), out.mutable_data());
  return out;
}

std::vector<Window> windows_from(const Array& contexts, const Array& targets) {
  if (contexts.ndim() != 3 || targets.ndim() != 3 || contexts.shape(0) != targets.shape(0) ||
      contexts.shape(1) != targets.shape(1))
    throw DimensionError("training", "expected contexts [N, C, T] and targets [N, C, H]");
  const Tensor c = from_numpy(contexts), y = from_numpy(targets);
  const std::size_t N = c.dim(0), C = c.dim(1), T = c.dim(2), H = y.dim(2);
  std::vector<Window> out;
  for (std::size_t n = 0; n < N; ++n) {
    Window w{Tensor({C, T}), Tensor({C, H}), n, -1};
    std::copy_n(c.storage().begin() + n * C * T, C * T, w.context.storage().begin());
    std::copy_n(y.storage().begin() + n * C * H, C * H, w.target.storage().begin());
    out.push_back(std::move(w));
  }
  return out;
}

py::dict losses_dict(const LossBreakdown& b) {
  py::dict d;
  d["L_pred"] = b.l_pred;
  d["L_aux"] = b.l_aux;
  d["L_budget"] = b.l_budget;
  d["L_reg"] = b.l_reg;
  d["total"] = b.total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Segment-wise forecasting core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_static("parse", &ModelConfig::parse, py::arg("text"))
      .def_static("load", &ModelConfig::load, py::arg("path"))
      .def_static("tiny", &tiny_config)
      .def("to_text", &ModelConfig::to_text)
      .def("set", &ModelConfig::set, py::arg("key"), py::arg("value"))
      .def("validate", &ModelConfig::validate)
      .def("segments", &ModelConfig::segments)
      .def_readwrite("context", &ModelConfig::context)
      .def_readwrite("horizon", &ModelConfig::horizon)
      .def_readwrite("segment_len", &ModelConfig::segment_len)
      .def_readwrite("patch_sizes", &ModelConfig::patch_sizes)
      .def_readwrite("hidden", &ModelConfig::hidden)
      .def_readwrite("layers", &ModelConfig::layers)
      .def_readwrite("heads", &ModelConfig::heads)
      .def_readwrite("experts", &ModelConfig::experts)
      .def_readwrite("top_k", &ModelConfig::top_k)
      .def_readwrite("n_exo", &ModelConfig::n_exo)
      .def_readwrite("seed", &ModelConfig::seed)
      .def_readwrite("epochs", &ModelConfig::epochs)
      .def_readwrite("batch_size", &ModelConfig::batch_size)
      .def_readwrite("lr", &ModelConfig::lr)
      .def_readwrite("max_steps", &ModelConfig::max_steps)
      .def("__repr__", [](const ModelConfig& c) { return "ModelConfig(\n" + c.to_text() + ")"; });

  py::class_<Model>(m, "Model")
      .def(py::init<ModelConfig>(), py::arg("config"))
      .def_property_readonly("config", &Model::config)
      .def_property_readonly("num_parameters", [](const Model& mdl) { return mdl.params().total_size(); })
      .def("predict", [](const Model& mdl, const Array& ctx) { return to_numpy(mdl.predict(from_numpy(ctx))); },
           py::arg("context"), "Forecast [B, C, H] on the raw scale from a context [B, C, T].")
      .def("expert_paths",
           [](const Model& mdl, const Array& ctx) {
             py::list out;
             for (const auto& t : mdl.expert_paths(from_numpy(ctx))) out.append(to_numpy(t));
             return out;
           },
           py::arg("context"))
      .def("parameters",
           [](const Model& mdl) {
             py::dict d;
             for (const auto& p : mdl.params()) d[py::str(p.name)] = to_numpy(p.value);
             return d;
           })
      .def("set_parameter",
           [](Model& mdl, const std::string& name, const Array& value) {
             Parameter& p = mdl.params().get(name);
             Tensor v = from_numpy(value);
             if (v.shape() != p.value.shape())
               throw DimensionError("training", "shape mismatch for parameter " + name);
             p.value = std::move(v);
           },
           py::arg("name"), py::arg("value"))
      .def("save_checkpoint", [](const Model& mdl, const std::string& path) { write_checkpoint(mdl.params(), path); },
           py::arg("path"))
      .def("load_checkpoint",
           [](Model& mdl, const std::string& path) { load_checkpoint_into(mdl.params(), read_checkpoint(path)); },
           py::arg("path"));

  m.def(
      "train",
      [](Model& model, const Array& contexts, const Array& targets) {
        const auto windows = windows_from(contexts, targets);
        std::ostringstream metrics;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(model, windows, &metrics);
        }
        py::list history;
        for (const auto& b : r.history) history.append(losses_dict(b));
        py::dict out;
        out["steps"] = r.steps;
        out["history"] = history;
        out["metrics_csv"] = metrics.str();
        return out;
      },
      py::arg("model"), py::arg("contexts"), py::arg("targets"),
      "Train in place on windows; returns the per-step loss history.");

  m.def(
      "evaluate",
      [](const Model& model, const Array& contexts, const Array& targets) {
        const EvalResult ev = evaluate(model, windows_from(contexts, targets));
        py::list rows;
        for (const auto& h : ev.horizons) {
          py::dict d;
          d["horizon"] = h.horizon;
          d["mse"] = h.mse;
          d["mae"] = h.mae;
          rows.append(d);
        }
        return py::make_tuple(to_numpy(ev.predictions), rows);
      },
      py::arg("model"), py::arg("contexts"), py::arg("targets"));

  m.def(
      "generate",
      [](std::size_t windows, std::size_t context, std::size_t horizon, std::uint64_t seed,
         std::vector<double> weights, const std::string& shape, double amplitude, double noise_std,
         std::size_t channels) {
        MixtureSpec spec;
        spec.weights = std::move(weights);
        if (shape == "ramp") spec.shape = ModeShape::kRamp;
        else if (shape == "sine") spec.shape = ModeShape::kSine;
        else throw ConfigError("synth-data", "unknown shape '" + shape + "'");
        spec.amplitude = amplitude;
        spec.noise_std = noise_std;
        spec.channels = channels;
        const SynthDataset d = generate(spec, windows, context, horizon, seed);
        const std::size_t C = channels;
        Array ctx({windows, C, context}), tgt({windows, C, horizon});
        py::array_t<int> labels(static_cast<py::ssize_t>(windows));
        for (std::size_t n = 0; n < windows; ++n) {
          std::copy(d.windows[n].context.storage().begin(), d.windows[n].context.storage().end(),
                    ctx.mutable_data() + n * C * context);
          std::copy(d.windows[n].target.storage().begin(), d.windows[n].target.storage().end(),
                    tgt.mutable_data() + n * C * horizon);
          labels.mutable_at(n) = d.windows[n].label;
        }
        return py::make_tuple(ctx, tgt, labels);
      },
      py::arg("windows"), py::arg("context"), py::arg("horizon"), py::arg("seed") = 0,
      py::arg("weights") = std::vector<double>{0.5, 0.5}, py::arg("shape") = "ramp", py::arg("amplitude") = 1.0,
      py::arg("noise_std") = 0.05, py::arg("channels") = 1,
      "Sample a synthetic multi-modal dataset: (contexts, targets, labels).");

  m.def(
      "route",
      [](const Array& z, const Array& w_gate, std::size_t k) {
        ad::Graph g;
        const GateDecision gd = route(g.constant(from_numpy(z)), g.constant(from_numpy(w_gate)), k);
        return py::make_tuple(to_numpy(gd.scores.value()), to_numpy(gd.gate.value()), gd.indices);
      },
      py::arg("z"), py::arg("w_gate"), py::arg("k"), "Top-k routing: (scores, sparse gate, kept indices).");

  m.def(
      "aux_loss",
      [](const Array& z, const Array& w_gate, std::size_t k, double lambda) {
        ad::Graph g;
        const GateDecision gd = route(g.constant(from_numpy(z)), g.constant(from_numpy(w_gate)), k);
        return aux_loss(gd, lambda).item();
      },
      py::arg("z"), py::arg("w_gate"), py::arg("k"), py::arg("lam"));

  m.def(
      "budget_loss",
      [](const Array& probs, double lambda) {
        ad::Graph g;
        const Tensor p = from_numpy(probs);
        if (p.rank() != 2) throw DimensionError("patch-embed", "expected selection probabilities [N, M]");
        auto pv = g.constant(p);
        return budget_loss(PatchSelection{pv, ad::mean_axis(pv, 0)}, lambda).item();
      },
      py::arg("probs"), py::arg("lam"), "Granularity budget on selection probabilities [N, M].");

  m.def(
      "scrn_refine",
      [](const std::vector<Array>& segments, const std::vector<Array>& embeddings, double alpha) {
        ad::Graph g;
        std::vector<ad::Var> s, e;
        for (const auto& a : segments) s.push_back(g.constant(from_numpy(a)));
        for (const auto& a : embeddings) e.push_back(g.constant(from_numpy(a)));
        py::list out;
        for (const auto& v : scrn_refine(s, e, g.constant(Tensor::scalar(alpha)))) out.append(to_numpy(v.value()));
        return out;
      },
      py::arg("segments"), py::arg("embeddings"), py::arg("alpha"));

  m.def(
      "gradcheck",
      [](const ModelConfig& cfg, std::size_t batch, double eps) {
        const GradCheckReport r = end_to_end_gradcheck(cfg, batch, eps);
        py::dict d;
        d["checked"] = r.checked;
        d["max_rel_error"] = r.max_rel_error;
        d["worst_param"] = r.worst_param;
        return d;
      },
      py::arg("config") = tiny_config(), py::arg("batch") = 2, py::arg("eps") = 1e-5);

  m.def(
      "flops",
      [](std::size_t d, std::size_t horizon, std::size_t seg_len, const std::string& mode) {
        const CostModel cm{d, horizon, seg_len};
        cm.validate();
        if (mode == "ar") return flops(cm, DecodeMode::kAr);
        if (mode == "nar") return flops(cm, DecodeMode::kNar);
        throw UsageError("bench", "mode must be 'ar' or 'nar'");
      },
      py::arg("d"), py::arg("horizon"), py::arg("seg_len"), py::arg("mode"));

  m.def(
      "bench",
      [](std::size_t d, std::size_t seg_len, std::vector<std::size_t> horizons, std::size_t reps, std::size_t warmup,
         bool parallel_heads, std::size_t threads, std::uint64_t seed) {
        BenchConfig bc{d, seg_len, std::move(horizons), reps, warmup, parallel_heads, threads, seed};
        BenchReport r;
        {
          py::gil_scoped_release release;
          r = run_bench(bc);
        }
        py::list rows;
        for (const auto& rec : r.records) {
          py::dict row;
          row["mode"] = to_string(rec.mode);
          row["horizon"] = rec.horizon;
          row["flops"] = rec.flops;
          row["measured_flops"] = rec.measured_flops;
          row["wall_ns"] = rec.wall_ns;
          row["reps"] = rec.reps;
          rows.append(row);
        }
        return rows;
      },
      py::arg("d") = 256, py::arg("seg_len") = 48, py::arg("horizons") = std::vector<std::size_t>{96, 192, 336, 720},
      py::arg("reps") = 30, py::arg("warmup") = 5, py::arg("parallel_heads") = false, py::arg("threads") = 0,
      py::arg("seed") = 7);

  m.def("git_blob_sha1", &git_blob_sha1, py::arg("content"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = dispatch(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a segcast subcommand; returns (exit code, stdout, stderr).");
}
