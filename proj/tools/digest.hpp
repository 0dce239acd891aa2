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


#ifndef RCX_TOOLS_DIGEST_HPP_
#define RCX_TOOLS_DIGEST_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace rcx::cli {

// Hex SHA-1 of "blob <size>\0<content>", the id git assigns to the content.
std::string git_blob_digest(std::string_view content);
std::string file_digest(const std::filesystem::path& path);

}  // namespace rcx::cli

#endif  // RCX_TOOLS_DIGEST_HPP_
