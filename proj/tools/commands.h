// Copyright 2026 The DP-TLDM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The dptldm command line: schema, train, generate, evaluate, accountant and
// benchmark subcommands.

#ifndef DPTLDM_TOOLS_COMMANDS_H_
#define DPTLDM_TOOLS_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"

namespace dptldm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitDivergence = 4;

// FailedPrecondition -> 3, Aborted and Internal -> 4, everything else -> 2.
int ExitCodeFor(const absl::Status& status);

// args[0] is the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace dptldm

#endif  // DPTLDM_TOOLS_COMMANDS_H_
