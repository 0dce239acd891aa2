// Copyright 2026 The rcx Authors.
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


#ifndef RCX_TOOLS_CLI_HPP_
#define RCX_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace rcx::cli {

// Runs one `rcx` invocation; args exclude the program name. Returns the exit
// status: 0 success, 2 invalid input or configuration, 3 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rcx::cli

#endif  // RCX_TOOLS_CLI_HPP_
