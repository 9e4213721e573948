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
#include <iosfwd>
#include <string>
#include <vector>

#include "segcast/config.hpp"
#include "segcast/gradcheck.hpp"

namespace segcast {

// Small configuration for end-to-end gradient checks: T=64, H=16, S_len=8,
// D=8, E=2, top-1 routing, one exogenous vector, SCRN refinement.
ModelConfig tiny_config();

// Finite-difference check of the total loss of `cfg` on a batch of synthetic
// two-mode windows.
GradCheckReport end_to_end_gradcheck(const ModelConfig& cfg, std::size_t batch = 2, double eps = 1e-5);

// Runs one subcommand (gen, train, eval, bench, gradcheck, ablate). args
// excludes the program name. Returns the process exit code: 0 on success,
// 2 for usage or configuration errors, 3 for numeric failures, 1 otherwise.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace segcast
