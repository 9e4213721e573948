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

#include "segcast/manifest.hpp"

#include <openssl/sha.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "segcast/errors.hpp"

namespace segcast {

std::string git_blob_sha1(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::ostringstream os;
  for (unsigned char b : digest) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(b);
  return os.str();
}

std::string git_blob_sha1_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cli", "cannot read " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return git_blob_sha1(buf.str());
}

void RunManifest::add_input(const std::string& path) { inputs.emplace_back(path, git_blob_sha1_file(path)); }

std::string RunManifest::to_text() const {
  std::ostringstream os;
  os << "segcast-manifest 1\n"
     << "command " << command << '\n'
     << "argv";
  for (const auto& a : argv) os << ' ' << std::quoted(a);
  os << "\nseed " << seed << '\n'
     << "config_sha1 " << git_blob_sha1(config_text) << '\n';
  for (const auto& [path, hash] : inputs) os << "input " << hash << ' ' << path << '\n';
  for (const auto& path : outputs) os << "output " << path << '\n';
  os << "config\n" << config_text;
  return os.str();
}

void RunManifest::write(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream cfg(fs::path(dir) / "config.txt");
  std::ofstream man(fs::path(dir) / "manifest.txt");
  if (!cfg || !man) throw IoError("cli", "cannot write manifest in " + dir);
  cfg << config_text;
  man << to_text();
}

}  // namespace segcast
