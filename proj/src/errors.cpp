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

#include "segcast/errors.hpp"

namespace segcast {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kParameter: return "parameter error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kUsage: return "usage error";
    case ErrorKind::kIo: return "io error";
  }
  return "error";
}

Error::Error(ErrorKind kind, std::string module, const std::string& what)
    : std::runtime_error(module + ": " + what), kind_(kind), module_(std::move(module)), detail_(what) {}

}  // namespace segcast
