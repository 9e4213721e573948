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

#include <cstdint>
#include <string>
#include <vector>

namespace segcast {

// Git blob hash: SHA-1 of "blob <size>\0" followed by the content, in hex.
std::string git_blob_sha1(const std::string& content);
std::string git_blob_sha1_file(const std::string& path);

// Record of one artifact-producing run. Holds the full configuration text,
// so the manifest alone is enough to repeat the run.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  std::string config_text;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, blob hash
  std::vector<std::string> outputs;

  void add_input(const std::string& path);
  std::string to_text() const;
  // Writes manifest.txt and config.txt into dir.
  void write(const std::string& dir) const;
};

}  // namespace segcast
