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

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "segcast/tensor.hpp"

namespace segcast {

// Multichannel series: one column per channel, rows ordered by time.
struct Series {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t channels() const { return columns.size(); }
  std::size_t length() const { return columns.empty() ? 0 : columns.front().size(); }
};

// Header row of channel names, then one row of values per time step.
Series read_series_csv(std::istream& is);
Series read_series_csv(const std::string& path);
void write_series_csv(const Series& series, std::ostream& os);
void write_series_csv(const Series& series, const std::string& path);

struct Window {
  Tensor context;  // [C x T]
  Tensor target;   // [C x H]
  std::size_t start = 0;
  int label = -1;  // generating mode for synthetic data, -1 if unknown
};

// Windows of T + H steps starting every `stride` steps.
std::vector<Window> cut_windows(const Series& series, std::size_t context, std::size_t horizon, std::size_t stride);
std::vector<Window> cut_windows_at(const Series& series, std::size_t context, std::size_t horizon,
                                   std::span<const std::size_t> starts);

// Sidecar of a synthetic dataset: window id, start row in the series, mode.
struct LabelRow {
  std::size_t window = 0;
  std::size_t start = 0;
  int mode = 0;
};

std::vector<LabelRow> read_labels_csv(const std::string& path);
void write_labels_csv(const std::vector<LabelRow>& rows, const std::string& path);

// Windows for a dataset directory: series.csv plus, when present, labels.csv
// whose starts and modes override the stride cut.
std::vector<Window> load_windows(const std::string& dir, std::size_t context, std::size_t horizon,
                                 std::size_t stride);

}  // namespace segcast
