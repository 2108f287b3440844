// Copyright 2026 The carlab Authors.
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

#ifndef CAR_TOOLS_COMMANDS_H_
#define CAR_TOOLS_COMMANDS_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace car::cli {

// Stable exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInput = 2,
  kExitMismatch = 3,
  kExitConfig = 4,
};

// Entry point of the `car` tool. args[0] is the program name. Results go to
// `out` unless --out redirects them; diagnostics and summaries go to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace car::cli

#endif  // CAR_TOOLS_COMMANDS_H_
