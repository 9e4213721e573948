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

#include "segcast/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "segcast/bench.hpp"
#include "segcast/errors.hpp"
#include "segcast/evaluate.hpp"
#include "segcast/manifest.hpp"
#include "segcast/model.hpp"
#include "segcast/synth.hpp"
#include "segcast/training.hpp"

namespace segcast {

namespace fs = std::filesystem;

ModelConfig tiny_config() {
  ModelConfig c;
  c.context = 64;
  c.horizon = 16;
  c.segment_len = 8;
  c.hidden = 8;
  c.heads = 2;
  c.experts = 2;
  c.top_k = 1;
  c.n_exo = 1;
  c.refine_mode = RefineMode::kScrn;
  c.batch_size = 2;
  return c;
}

GradCheckReport end_to_end_gradcheck(const ModelConfig& cfg, std::size_t batch, double eps) {
  Model model(cfg);
  MixtureSpec spec;
  spec.channels = 1;
  const SynthDataset data = generate(spec, batch, cfg.context, cfg.horizon, cfg.seed);
  std::vector<std::size_t> ids(batch);
  for (std::size_t i = 0; i < batch; ++i) ids[i] = i;
  const auto [ctx, tgt] = make_batch(data.windows, ids);
  const NormStats st = norm_stats(ctx);
  const Tensor x = normalize(ctx, st), y = normalize(tgt, st);
  GradCheckOptions opt;
  opt.eps = eps;
  return check_gradients(
      [&](ad::Graph& g) {
        const Forecast f = model.forward(g, x);
        return model.losses(g, f, y).total;
      },
      model.params(), opt);
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cli", "cannot read " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IoError("cli", "cannot write " + path.string());
  os << text;
}

ModelConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  ModelConfig cfg = path.empty() ? ModelConfig{} : ModelConfig::parse(read_text(path));
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("cli", "--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

// Context and horizon recorded next to a generated dataset, if any.
std::optional<std::pair<std::size_t, std::size_t>> recorded_shape(const std::string& dir) {
  const fs::path p = fs::path(dir) / "mixture.txt";
  if (!fs::exists(p)) return std::nullopt;
  std::istringstream is(read_text(p.string()));
  std::string line;
  std::size_t context = 0, horizon = 0;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key, eq;
    std::size_t value = 0;
    if (ls >> key >> eq >> value) {
      if (key == "context") context = value;
      if (key == "horizon") horizon = value;
    }
  }
  return std::pair{context, horizon};
}

std::vector<Window> load_for(const std::string& dir, const ModelConfig& cfg, std::size_t stride) {
  if (const auto shape = recorded_shape(dir)) {
    if (shape->first != cfg.context || shape->second != cfg.horizon) {
      throw ConfigError("cli", "dataset " + dir + " was generated with context " + std::to_string(shape->first) +
                                   " and horizon " + std::to_string(shape->second) + ", config has " +
                                   std::to_string(cfg.context) + " and " + std::to_string(cfg.horizon));
    }
  }
  return load_windows(dir, cfg.context, cfg.horizon, stride ? stride : cfg.segment_len);
}

std::optional<MixtureSpec> load_mixture(const std::string& dir) {
  const fs::path p = fs::path(dir) / "mixture.txt";
  if (!fs::exists(p)) return std::nullopt;
  return MixtureSpec::parse(read_text(p.string()));
}

void add_dataset_inputs(RunManifest& m, const std::string& dir) {
  for (const char* name : {"series.csv", "labels.csv", "mixture.txt"}) {
    const fs::path p = fs::path(dir) / name;
    if (fs::exists(p)) m.add_input(p.string());
  }
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kUsage:
      return 2;
    case ErrorKind::kNumeric:
      return 3;
    default:
      return 1;
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"segcast: non-autoregressive segment forecaster"};
  app.require_subcommand(1);
  RunManifest manifest;
  manifest.argv = args;

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic multi-mode dataset");
  std::string gen_out, gen_mixture, gen_shape = "ramp";
  std::size_t gen_windows = 1000, gen_context = 512, gen_horizon = 96, gen_modes = 2, gen_channels = 1,
              gen_period = 16;
  std::uint64_t gen_seed = 42;
  double gen_amp = 1.0, gen_noise = 0.05, gen_threshold = 0.0;
  bool gen_conditional = false;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--windows", gen_windows, "Number of windows")->capture_default_str();
  gen->add_option("--context", gen_context, "Context length T")->capture_default_str();
  gen->add_option("--horizon", gen_horizon, "Horizon H")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Master seed")->capture_default_str();
  gen->add_option("--mixture", gen_mixture, "Mixture description file (overrides the flags below)");
  gen->add_option("--modes", gen_modes, "Number of equally weighted modes")->capture_default_str();
  gen->add_option("--shape", gen_shape, "ramp or sine")->capture_default_str();
  gen->add_option("--amplitude", gen_amp, "Mode amplitude")->capture_default_str();
  gen->add_option("--noise", gen_noise, "Observation noise std")->capture_default_str();
  gen->add_option("--channels", gen_channels, "Channels")->capture_default_str();
  gen->add_option("--period", gen_period, "History sine period")->capture_default_str();
  gen->add_flag("--conditional", gen_conditional, "Reverse the mode weights for histories ending below --threshold");
  gen->add_option("--threshold", gen_threshold, "History threshold")->capture_default_str();

  // shared model options
  std::string config_path, data_dir, run_out, checkpoint_path, run_dir;
  std::vector<std::string> overrides;
  std::size_t stride = 0;
  auto model_opts = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file (key = value)");
    sub->add_option("--set", overrides, "Override a config key, key=value (repeatable)");
  };

  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint plus metrics");
  model_opts(train_cmd);
  train_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  train_cmd->add_option("--out", run_out, "Run directory")->required();
  train_cmd->add_option("--stride", stride, "Window stride for unlabelled series (default segment_len)");

  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint");
  eval_cmd->add_option("--run", run_dir, "Training run directory (config.txt, checkpoint.txt)");
  eval_cmd->add_option("--config", config_path, "Config file, when --run is not given");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file, when --run is not given");
  eval_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  eval_cmd->add_option("--out", run_out, "Output directory (default <run>/eval)");
  eval_cmd->add_option("--stride", stride, "Window stride for unlabelled series (default segment_len)");

  auto* bench_cmd = app.add_subcommand("bench", "Time AR and NAR decoding");
  BenchConfig bc;
  std::vector<std::size_t> horizons;
  bench_cmd->add_option("--horizons", horizons, "Comma-separated horizons")->delimiter(',');
  bench_cmd->add_option("--reps", bc.reps, "Timed repetitions")->capture_default_str();
  bench_cmd->add_option("--warmup", bc.warmup, "Discarded warm-up runs")->capture_default_str();
  bench_cmd->add_flag("--parallel-heads", bc.parallel_heads, "Run NAR segment heads on a thread pool");
  bench_cmd->add_option("--threads", bc.threads, "Pool size (default: hardware threads)");
  bench_cmd->add_option("--d", bc.d, "Decoder width")->capture_default_str();
  bench_cmd->add_option("--seg-len", bc.seg_len, "Segment length")->capture_default_str();
  bench_cmd->add_option("--seed", bc.seed, "Seed")->capture_default_str();
  bench_cmd->add_option("--out", run_out, "Run directory for bench.csv");

  auto* grad_cmd = app.add_subcommand("gradcheck", "End-to-end finite-difference gradient check");
  model_opts(grad_cmd);
  double tol = 1e-4, eps = 1e-5;
  std::size_t grad_batch = 2;
  grad_cmd->add_option("--tol", tol, "Pass threshold on max relative error")->capture_default_str();
  grad_cmd->add_option("--eps", eps, "Central-difference step")->capture_default_str();
  grad_cmd->add_option("--batch", grad_batch, "Windows in the checked batch")->capture_default_str();

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score the five ablation variants");
  model_opts(ablate_cmd);
  double train_fraction = 0.8;
  ablate_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  ablate_cmd->add_option("--out", run_out, "Run directory")->required();
  ablate_cmd->add_option("--train-fraction", train_fraction, "Share of windows used for training")
      ->capture_default_str();
  ablate_cmd->add_option("--stride", stride, "Window stride for unlabelled series (default segment_len)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error [usage error] cli: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) {
      MixtureSpec spec;
      if (!gen_mixture.empty()) {
        spec = MixtureSpec::parse(read_text(gen_mixture));
        manifest.add_input(gen_mixture);
      } else {
        if (gen_modes == 0) throw UsageError("cli", "--modes must be positive");
        spec.weights.assign(gen_modes, 1.0 / static_cast<double>(gen_modes));
        if (gen_shape == "ramp") spec.shape = ModeShape::kRamp;
        else if (gen_shape == "sine") spec.shape = ModeShape::kSine;
        else throw UsageError("cli", "--shape must be ramp or sine");
        spec.amplitude = gen_amp;
        spec.noise_std = gen_noise;
        spec.channels = gen_channels;
        spec.history_period = gen_period;
        spec.conditional_weights = gen_conditional;
        spec.threshold = gen_threshold;
      }
      const SynthDataset data = generate(spec, gen_windows, gen_context, gen_horizon, gen_seed);
      write_dataset(data, spec, gen_out);
      manifest.command = "gen";
      manifest.seed = gen_seed;
      manifest.config_text = read_text((fs::path(gen_out) / "mixture.txt").string()) +
                             "seed = " + std::to_string(gen_seed) + '\n';
      manifest.outputs = {"series.csv", "labels.csv", "mixture.txt"};
      manifest.write(gen_out);
      out << "wrote " << data.windows.size() << " windows to " << gen_out << '\n';
      return 0;
    }

    if (train_cmd->parsed()) {
      const ModelConfig cfg = resolve_config(config_path, overrides);
      const auto windows = load_for(data_dir, cfg, stride);
      Model model(cfg);
      fs::create_directories(run_out);
      std::ofstream metrics(fs::path(run_out) / "metrics.csv");
      if (!metrics) throw IoError("cli", "cannot write metrics in " + run_out);
      const TrainResult tr = train(model, windows, &metrics);
      write_checkpoint(model.params(), (fs::path(run_out) / "checkpoint.txt").string());
      manifest.command = "train";
      manifest.seed = cfg.seed;
      manifest.config_text = cfg.to_text();
      add_dataset_inputs(manifest, data_dir);
      manifest.outputs = {"checkpoint.txt", "metrics.csv"};
      manifest.write(run_out);
      out << "trained " << tr.steps << " steps on " << windows.size() << " windows";
      if (!tr.history.empty()) out << ", final total loss " << format_double(tr.history.back().total);
      out << '\n';
      return 0;
    }

    if (eval_cmd->parsed()) {
      std::string cfg_file = config_path, ckpt_file = checkpoint_path;
      if (!run_dir.empty()) {
        cfg_file = (fs::path(run_dir) / "config.txt").string();
        ckpt_file = (fs::path(run_dir) / "checkpoint.txt").string();
        if (run_out.empty()) run_out = (fs::path(run_dir) / "eval").string();
      }
      if (cfg_file.empty() || ckpt_file.empty()) throw UsageError("cli", "eval needs --run or --config and --checkpoint");
      if (run_out.empty()) throw UsageError("cli", "eval needs --out when --run is not given");
      const ModelConfig cfg = ModelConfig::parse(read_text(cfg_file));
      Model model(cfg);
      load_checkpoint_into(model.params(), read_checkpoint(ckpt_file));
      const auto windows = load_for(data_dir, cfg, stride);
      const auto mixture = load_mixture(data_dir);
      const EvalResult ev = evaluate(model, windows, mixture ? &*mixture : nullptr);

      fs::create_directories(run_out);
      {
        std::ofstream os(fs::path(run_out) / "predictions.csv");
        write_predictions_csv(ev.predictions, os);
      }
      std::ostringstream table;
      table << "horizon,mse,mae\n";
      for (const auto& h : ev.horizons)
        table << h.horizon << ',' << format_double(h.mse) << ',' << format_double(h.mae) << '\n';
      write_text(fs::path(run_out) / "eval.csv", table.str());
      out << table.str();
      manifest.outputs = {"predictions.csv", "eval.csv"};
      if (ev.modes) {
        const ModeMetrics& m = *ev.modes;
        std::ostringstream mm;
        mm << "metric,value\n"
           << "mean_head_error," << format_double(m.mean_head_error) << '\n'
           << "best_of_e_error," << format_double(m.best_of_e_error) << '\n'
           << "diversity," << format_double(m.diversity) << '\n';
        if (mixture) mm << "cond_mean_gap," << format_double(m.cond_mean_gap) << '\n';
        for (std::size_t k = 0; k < m.per_mode_error.size(); ++k)
          mm << "mode_" << k << "_error," << format_double(m.per_mode_error[k]) << '\n';
        write_text(fs::path(run_out) / "mode_metrics.csv", mm.str());
        out << mm.str();
        manifest.outputs.push_back("mode_metrics.csv");
      }
      manifest.command = "eval";
      manifest.seed = cfg.seed;
      manifest.config_text = cfg.to_text();
      manifest.add_input(ckpt_file);
      add_dataset_inputs(manifest, data_dir);
      manifest.write(run_out);
      return 0;
    }

    if (bench_cmd->parsed()) {
      if (!horizons.empty()) bc.horizons = horizons;
      const BenchReport report = run_bench(bc);
      std::ostringstream csv;
      write_bench_csv(report.records, csv);
      out << csv.str();
      for (const auto& w : report.warnings) err << "warning: " << w << '\n';
      err << "threads " << report.threads << ", clock step " << format_double(report.clock_granularity_ns)
          << " ns\n";
      if (!run_out.empty()) {
        fs::create_directories(run_out);
        write_text(fs::path(run_out) / "bench.csv", csv.str());
        std::ostringstream cfg;
        cfg << "d = " << bc.d << "\nseg_len = " << bc.seg_len << "\nhorizons = ";
        for (std::size_t i = 0; i < bc.horizons.size(); ++i) cfg << (i ? "," : "") << bc.horizons[i];
        cfg << "\nreps = " << bc.reps << "\nwarmup = " << bc.warmup
            << "\nparallel_heads = " << (bc.parallel_heads ? "true" : "false") << "\nthreads = " << report.threads
            << "\nseed = " << bc.seed << '\n';
        manifest.command = "bench";
        manifest.seed = bc.seed;
        manifest.config_text = cfg.str();
        manifest.outputs = {"bench.csv"};
        manifest.write(run_out);
      }
      return 0;
    }

    if (grad_cmd->parsed()) {
      ModelConfig cfg = config_path.empty() ? tiny_config() : ModelConfig::parse(read_text(config_path));
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("cli", "--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      cfg.validate();
      const GradCheckReport r = end_to_end_gradcheck(cfg, grad_batch, eps);
      const bool ok = r.passed(tol);
      out << "checked " << r.checked << " entries, max rel. err " << format_double(r.max_rel_error) << " at "
          << r.worst_param << "[" << r.worst_index << "] (analytic " << format_double(r.worst_analytic)
          << ", numeric " << format_double(r.worst_numeric) << "): " << (ok ? "PASS" : "FAIL") << " at tol "
          << format_double(tol) << '\n';
      return ok ? 0 : 3;
    }

    if (ablate_cmd->parsed()) {
      const ModelConfig cfg = resolve_config(config_path, overrides);
      const auto windows = load_for(data_dir, cfg, stride);
      const auto rows = run_ablation(cfg, windows, train_fraction);
      std::ostringstream csv;
      write_ablation_csv(rows, csv);
      fs::create_directories(run_out);
      write_text(fs::path(run_out) / "ablation.csv", csv.str());
      out << csv.str();
      manifest.command = "ablate";
      manifest.seed = cfg.seed;
      manifest.config_text = cfg.to_text();
      add_dataset_inputs(manifest, data_dir);
      manifest.outputs = {"ablation.csv"};
      manifest.write(run_out);
      const bool finite = std::all_of(rows.begin(), rows.end(), [](const AblationRow& r) { return r.finite; });
      if (!finite) {
        err << "error [numeric error] cli: an ablation variant produced a non-finite loss\n";
        return 3;
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "] " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error [internal] " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace segcast
