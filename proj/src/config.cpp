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

#include "segcast/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "segcast/errors.hpp"
#include "segcast/parameters.hpp"

namespace segcast {

namespace {

constexpr const char* kModule = "config";

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw ConfigError(kModule, key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(kModule, key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(kModule, key + ": expected true or false, got '" + v + "'");
}

}  // namespace

HeadKind parse_head_kind(std::string_view text) {
  if (text == "sage") return HeadKind::kSage;
  if (text == "linear") return HeadKind::kLinear;
  throw ConfigError(kModule, "head: expected sage or linear, got '" + std::string(text) + "'");
}

const char* to_string(HeadKind kind) { return kind == HeadKind::kSage ? "sage" : "linear"; }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "context",     "horizon",       "segment_len",   "patch_sizes", "patch_hard_select", "hidden",
      "layers",      "heads",         "head",          "experts",     "top_k",             "n_exo",
      "refine_mode", "scrn_alpha_init", "scad_width",  "scad_heads",  "criterion",         "lambda_aux",
      "lambda_budget", "lambda_reg",  "use_reg",       "seed",        "epochs",            "batch_size",
      "lr",          "max_steps"};
  return keys;
}

void ModelConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "context") context = parse_size(key, v);
  else if (key == "horizon") horizon = parse_size(key, v);
  else if (key == "segment_len") segment_len = parse_size(key, v);
  else if (key == "patch_sizes") {
    patch_sizes.clear();
    std::istringstream is(v);
    std::string item;
    while (std::getline(is, item, ',')) patch_sizes.push_back(parse_size(key, trim(item)));
  } else if (key == "patch_hard_select") patch_hard_select = parse_bool(key, v);
  else if (key == "hidden") hidden = parse_size(key, v);
  else if (key == "layers") layers = parse_size(key, v);
  else if (key == "heads") heads = parse_size(key, v);
  else if (key == "head") head = parse_head_kind(v);
  else if (key == "experts") experts = parse_size(key, v);
  else if (key == "top_k") top_k = parse_size(key, v);
  else if (key == "n_exo") n_exo = parse_size(key, v);
  else if (key == "refine_mode") refine_mode = parse_refine_mode(v);
  else if (key == "scrn_alpha_init") scrn_alpha_init = parse_real(key, v);
  else if (key == "scad_width") scad_width = parse_size(key, v);
  else if (key == "scad_heads") scad_heads = parse_size(key, v);
  else if (key == "criterion") criterion = parse_criterion(v);
  else if (key == "lambda_aux") lambda_aux = parse_real(key, v);
  else if (key == "lambda_budget") lambda_budget = parse_real(key, v);
  else if (key == "lambda_reg") lambda_reg = parse_real(key, v);
  else if (key == "use_reg") use_reg = parse_bool(key, v);
  else if (key == "seed") seed = parse_size(key, v);
  else if (key == "epochs") epochs = parse_size(key, v);
  else if (key == "batch_size") batch_size = parse_size(key, v);
  else if (key == "lr") lr = parse_real(key, v);
  else if (key == "max_steps") max_steps = parse_size(key, v);
  else throw ConfigError(kModule, "unknown key '" + key + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(kModule, what); };
  if (context < 2) fail("context: must be at least 2");
  if (horizon == 0) fail("horizon: must be positive");
  if (segment_len == 0) fail("segment_len: must be positive");
  if (horizon % segment_len != 0)
    fail("horizon: " + std::to_string(horizon) + " is not a multiple of segment_len " + std::to_string(segment_len));
  if (patch_sizes.empty()) fail("patch_sizes: need at least one granularity");
  for (std::size_t i = 0; i < patch_sizes.size(); ++i) {
    if (patch_sizes[i] == 0) fail("patch_sizes: granularities must be positive");
    if (i > 0 && patch_sizes[i] <= patch_sizes[i - 1]) fail("patch_sizes: must be strictly ascending");
    if (patch_sizes.back() % patch_sizes[i] != 0) fail("patch_sizes: every granularity must divide the largest");
  }
  if (context % patch_sizes.back() != 0)
    fail("context: " + std::to_string(context) + " is not a multiple of the patch region " +
         std::to_string(patch_sizes.back()));
  if (hidden == 0) fail("hidden: must be positive");
  if (heads == 0 || hidden % heads != 0) fail("heads: must divide hidden");
  if (experts == 0) fail("experts: must be positive");
  if (top_k == 0 || top_k > experts) fail("top_k: must lie in [1, experts]");
  if (refine_mode == RefineMode::kScad && (scad_width == 0 || scad_heads == 0 || scad_width % scad_heads != 0))
    fail("scad_heads: must divide scad_width");
  for (const auto& [name, value] : {std::pair{"lambda_aux", lambda_aux}, std::pair{"lambda_budget", lambda_budget},
                                    std::pair{"lambda_reg", lambda_reg}}) {
    if (!(value >= 0.0) || !std::isfinite(value)) fail(std::string(name) + ": must be finite and non-negative");
  }
  if (!std::isfinite(scrn_alpha_init)) fail("scrn_alpha_init: must be finite");
  if (batch_size == 0) fail("batch_size: must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr: must be finite and non-negative");
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "context = " << context << '\n'
     << "horizon = " << horizon << '\n'
     << "segment_len = " << segment_len << '\n'
     << "patch_sizes = ";
  for (std::size_t i = 0; i < patch_sizes.size(); ++i) os << (i ? "," : "") << patch_sizes[i];
  os << '\n'
     << "patch_hard_select = " << (patch_hard_select ? "true" : "false") << '\n'
     << "hidden = " << hidden << '\n'
     << "layers = " << layers << '\n'
     << "heads = " << heads << '\n'
     << "head = " << to_string(head) << '\n'
     << "experts = " << experts << '\n'
     << "top_k = " << top_k << '\n'
     << "n_exo = " << n_exo << '\n'
     << "refine_mode = " << to_string(refine_mode) << '\n'
     << "scrn_alpha_init = " << format_double(scrn_alpha_init) << '\n'
     << "scad_width = " << scad_width << '\n'
     << "scad_heads = " << scad_heads << '\n'
     << "criterion = " << to_string(criterion) << '\n'
     << "lambda_aux = " << format_double(lambda_aux) << '\n'
     << "lambda_budget = " << format_double(lambda_budget) << '\n'
     << "lambda_reg = " << format_double(lambda_reg) << '\n'
     << "use_reg = " << (use_reg ? "true" : "false") << '\n'
     << "seed = " << seed << '\n'
     << "epochs = " << epochs << '\n'
     << "batch_size = " << batch_size << '\n'
     << "lr = " << format_double(lr) << '\n'
     << "max_steps = " << max_steps << '\n';
  return os.str();
}

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig cfg;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(kModule, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError(kModule, "duplicate key '" + key + "'");
    cfg.set(key, line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(kModule, "cannot open config " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse(buf.str());
}

}  // namespace segcast
