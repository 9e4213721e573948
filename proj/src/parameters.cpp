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

#include "segcast/parameters.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "segcast/errors.hpp"
#include "segcast/rng.hpp"

namespace segcast {

Parameter& ParameterStore::add(std::string name, Tensor init) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw ParameterError("tensor-autodiff", "invalid parameter name '" + name + "'");
  }
  if (index_.count(name)) throw ParameterError("tensor-autodiff", "duplicate parameter name '" + name + "'");
  index_.emplace(name, params_.size());
  Tensor grad(init.shape(), 0.0);
  params_.push_back(Parameter{std::move(name), std::move(init), std::move(grad)});
  return params_.back();
}

Parameter& ParameterStore::add_xavier(std::string name, Shape shape, std::size_t fan_in, std::size_t fan_out,
                                      Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return add_uniform(std::move(name), std::move(shape), bound, rng);
}

Parameter& ParameterStore::add_uniform(std::string name, Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return add(std::move(name), std::move(t));
}

bool ParameterStore::contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

Parameter& ParameterStore::get(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ParameterError("tensor-autodiff", "unknown parameter '" + std::string(name) + "'");
  return params_[it->second];
}

const Parameter& ParameterStore::get(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->get(name);
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

void ParameterStore::copy_values_from(const ParameterStore& other) { load_checkpoint_into(*this, other); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_checkpoint(const ParameterStore& store, std::ostream& os) {
  os << "segcast-checkpoint 1 " << store.count() << '\n';
  for (const auto& p : store) {
    os << "param " << p.name << ' ' << p.value.rank();
    for (auto extent : p.value.shape()) os << ' ' << extent;
    os << '\n';
    const auto values = p.value.data();
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? " " : "") << format_double(values[i]);
    os << '\n';
  }
}

void write_checkpoint(const ParameterStore& store, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("tensor-autodiff", "cannot write checkpoint " + path);
  write_checkpoint(store, os);
  if (!os) throw IoError("tensor-autodiff", "failed writing checkpoint " + path);
}

ParameterStore read_checkpoint(std::istream& is) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(is >> magic >> version >> count) || magic != "segcast-checkpoint" || version != 1) {
    throw IoError("tensor-autodiff", "not a segcast checkpoint");
  }
  ParameterStore store;
  for (std::size_t r = 0; r < count; ++r) {
    std::string tag, name;
    std::size_t rank = 0;
    if (!(is >> tag >> name >> rank) || tag != "param" || rank == 0) {
      throw IoError("tensor-autodiff", "malformed record " + std::to_string(r));
    }
    Shape shape(rank);
    for (auto& extent : shape) {
      if (!(is >> extent)) throw IoError("tensor-autodiff", "malformed shape for " + name);
    }
    std::vector<double> values(shape_size(shape));
    std::string token;
    for (auto& v : values) {
      if (!(is >> token)) throw IoError("tensor-autodiff", "truncated values for " + name);
      char* end = nullptr;
      v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') throw IoError("tensor-autodiff", "bad number '" + token + "'");
    }
    store.add(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return store;
}

ParameterStore read_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("tensor-autodiff", "cannot open checkpoint " + path);
  return read_checkpoint(is);
}

void load_checkpoint_into(ParameterStore& store, const ParameterStore& checkpoint) {
  if (store.count() != checkpoint.count()) {
    throw ParameterError("tensor-autodiff", "checkpoint has " + std::to_string(checkpoint.count()) +
                                                " parameters, model has " + std::to_string(store.count()));
  }
  for (auto& p : store) {
    if (!checkpoint.contains(p.name)) throw ParameterError("tensor-autodiff", "checkpoint lacks '" + p.name + "'");
    const auto& src = checkpoint.get(p.name);
    if (src.value.shape() != p.value.shape()) {
      throw ParameterError("tensor-autodiff", "shape mismatch for '" + p.name + "': " +
                                                  shape_string(src.value.shape()) + " vs " +
                                                  shape_string(p.value.shape()));
    }
    p.value = src.value;
  }
}

}  // namespace segcast
