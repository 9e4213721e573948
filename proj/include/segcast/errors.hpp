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

#include <stdexcept>
#include <string>

namespace segcast {

enum class ErrorKind {
  kDimension,
  kConfig,
  kParameter,
  kNumeric,
  kUsage,
  kIo,
};

const char* to_string(ErrorKind kind);

// Every error raised by the library carries a category and the name of the
// module that raised it ("patch-embed", "sage-heads", ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what);

  ErrorKind kind() const { return kind_; }
  const std::string& module() const { return module_; }
  // Message without the module prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string detail_;
};

class DimensionError : public Error {
 public:
  DimensionError(std::string module, const std::string& what)
      : Error(ErrorKind::kDimension, std::move(module), what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::string module, const std::string& what)
      : Error(ErrorKind::kConfig, std::move(module), what) {}
};

class ParameterError : public Error {
 public:
  ParameterError(std::string module, const std::string& what)
      : Error(ErrorKind::kParameter, std::move(module), what) {}
};

class NumericError : public Error {
 public:
  NumericError(std::string module, const std::string& what)
      : Error(ErrorKind::kNumeric, std::move(module), what) {}
};

class UsageError : public Error {
 public:
  UsageError(std::string module, const std::string& what)
      : Error(ErrorKind::kUsage, std::move(module), what) {}
};

class IoError : public Error {
 public:
  IoError(std::string module, const std::string& what)
      : Error(ErrorKind::kIo, std::move(module), what) {}
};

}  // namespace segcast
