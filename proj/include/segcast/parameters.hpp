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

#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "segcast/tensor.hpp"

namespace segcast {

class Rng;

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Named parameter registry. Names are unique; iteration follows insertion
// order, which is also the checkpoint record order.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& add(std::string name, Tensor init);
  // Scaled uniform init with bound sqrt(6 / (fan_in + fan_out)).
  Parameter& add_xavier(std::string name, Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);
  Parameter& add_uniform(std::string name, Shape shape, double bound, Rng& rng);

  bool contains(std::string_view name) const;
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;

  std::size_t count() const { return params_.size(); }
  std::size_t total_size() const;

  void zero_grad();
  void copy_values_from(const ParameterStore& other);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Shortest decimal form that round-trips: 17 significant digits.
std::string format_double(double v);

// Checkpoint: one record per parameter, "param <name> <rank> <extents...>"
// followed by a line of row-major values printed with 17 significant digits.
void write_checkpoint(const ParameterStore& store, std::ostream& os);
void write_checkpoint(const ParameterStore& store, const std::string& path);
ParameterStore read_checkpoint(std::istream& is);
ParameterStore read_checkpoint(const std::string& path);

// Copies checkpoint values into an existing store; names and shapes must match exactly.
void load_checkpoint_into(ParameterStore& store, const ParameterStore& checkpoint);

}  // namespace segcast
