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

#ifndef CAR_TOOLS_MANIFEST_H_
#define CAR_TOOLS_MANIFEST_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace car::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Provenance record written next to every output. Outputs themselves carry no
// timestamps, so reruns with the same manifest configuration are
// byte-identical.
struct RunManifest {
  std::string command;
  std::string config_json;  // resolved configuration, raw JSON
  std::vector<std::pair<std::string, std::string>> input_digests;  // path, sha256
  std::vector<std::string> outputs;
  std::string summary_json = "null";

  void AddInput(const std::filesystem::path& path);
  std::string ToJson() const;
};

std::string Sha256Hex(std::string_view data);

// Whole-file read; throws car::InputError when unreadable.
std::string ReadFile(const std::filesystem::path& path);

// Write via a sibling temp file and rename, so readers never observe a
// partial file.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view data);

}  // namespace car::cli

#endif  // CAR_TOOLS_MANIFEST_H_
