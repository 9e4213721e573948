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

#include "segcast/dataset.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "segcast/errors.hpp"
#include "segcast/parameters.hpp"

namespace segcast {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t first = cell.find_first_not_of(' ');
    out.push_back(first == std::string::npos ? std::string{} : cell.substr(first));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, std::size_t row) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0') {
    throw IoError("synth-data", "row " + std::to_string(row) + ": cannot parse '" + text + "'");
  }
  return v;
}

}  // namespace

Series read_series_csv(std::istream& is) {
  Series series;
  std::string line;
  if (!std::getline(is, line)) throw IoError("synth-data", "empty series file");
  series.names = split_csv_line(line);
  if (series.names.empty()) throw IoError("synth-data", "missing header row");
  series.columns.resize(series.names.size());
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != series.names.size()) {
      throw IoError("synth-data", "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                      " cells, header has " + std::to_string(series.names.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) series.columns[c].push_back(parse_double(cells[c], row));
  }
  return series;
}

Series read_series_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("synth-data", "cannot open " + path);
  return read_series_csv(is);
}

void write_series_csv(const Series& series, std::ostream& os) {
  for (std::size_t c = 0; c < series.names.size(); ++c) os << (c ? "," : "") << series.names[c];
  os << '\n';
  for (std::size_t t = 0; t < series.length(); ++t) {
    for (std::size_t c = 0; c < series.channels(); ++c) os << (c ? "," : "") << format_double(series.columns[c][t]);
    os << '\n';
  }
}

void write_series_csv(const Series& series, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("synth-data", "cannot write " + path);
  write_series_csv(series, os);
}

std::vector<Window> cut_windows_at(const Series& series, std::size_t context, std::size_t horizon,
                                   std::span<const std::size_t> starts) {
  const std::size_t C = series.channels();
  if (C == 0) throw DimensionError("synth-data", "series has no channels");
  std::vector<Window> out;
  out.reserve(starts.size());
  for (auto start : starts) {
    if (start + context + horizon > series.length()) {
      throw DimensionError("synth-data", "window at " + std::to_string(start) + " exceeds series length " +
                                             std::to_string(series.length()));
    }
    Window w{Tensor({C, context}), Tensor({C, horizon}), start, -1};
    for (std::size_t c = 0; c < C; ++c) {
      const auto& col = series.columns[c];
      for (std::size_t t = 0; t < context; ++t) w.context[c * context + t] = col[start + t];
      for (std::size_t t = 0; t < horizon; ++t) w.target[c * horizon + t] = col[start + context + t];
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Window> cut_windows(const Series& series, std::size_t context, std::size_t horizon, std::size_t stride) {
  if (stride == 0) throw ConfigError("synth-data", "window stride must be positive");
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + context + horizon <= series.length(); s += stride) starts.push_back(s);
  return cut_windows_at(series, context, horizon, starts);
}

std::vector<LabelRow> read_labels_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("synth-data", "cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (split_csv_line(line) != std::vector<std::string>{"window", "start", "mode"}) {
    throw IoError("synth-data", path + ": expected header window,start,mode");
  }
  std::vector<LabelRow> rows;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw IoError("synth-data", path + ": malformed row " + std::to_string(row));
    rows.push_back(LabelRow{static_cast<std::size_t>(parse_double(cells[0], row)),
                            static_cast<std::size_t>(parse_double(cells[1], row)),
                            static_cast<int>(parse_double(cells[2], row))});
  }
  return rows;
}

void write_labels_csv(const std::vector<LabelRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("synth-data", "cannot write " + path);
  os << "window,start,mode\n";
  for (const auto& r : rows) os << r.window << ',' << r.start << ',' << r.mode << '\n';
}

std::vector<Window> load_windows(const std::string& dir, std::size_t context, std::size_t horizon,
                                 std::size_t stride) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  const Series series = read_series_csv((base / "series.csv").string());
  const fs::path labels_path = base / "labels.csv";
  if (!fs::exists(labels_path)) return cut_windows(series, context, horizon, stride);
  const auto labels = read_labels_csv(labels_path.string());
  std::vector<std::size_t> starts;
  for (const auto& r : labels) starts.push_back(r.start);
  auto windows = cut_windows_at(series, context, horizon, starts);
  for (std::size_t i = 0; i < windows.size(); ++i) windows[i].label = labels[i].mode;
  return windows;
}

}  // namespace segcast
