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

// Parsing of tagged agent transcripts.
//
// A transcript is a sequence of XML-like blocks. The accepted grammar is
//
//   trajectory := turn+ answer confidence
//   turn       := <think>..</think> [ <CALL>..</CALL> <RESULT>..</RESULT> ]
//   answer     := <answer>..</answer>
//   confidence := <confidence>N</confidence>      N integer in [0, 100]
//
// where CALL/RESULT come from the ToolSchema ("search"/"information" for
// evidence tools, "code"/"output" for verification tools). Whitespace between
// blocks is ignored; any other text outside a block is a violation.
//
// Parsing never fails. Structural defects are collected as violations and
// surface as `format_valid == false`. Duplicate answer/confidence blocks are
// tolerated for extraction (the last well-formed one wins) but invalidate the
// format.

#ifndef CAR_TRANSCRIPT_H_
#define CAR_TRANSCRIPT_H_

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace car {

enum class ToolKind { kSearch, kCode };

struct ToolSchema {
  std::string call_tag;
  std::string result_tag;

  static ToolSchema Search() { return {"search", "information"}; }
  static ToolSchema Code() { return {"code", "output"}; }
  static ToolSchema For(ToolKind kind);

  // Throws std::invalid_argument when the tag pair is unusable.
  void Validate() const;

  bool operator==(const ToolSchema&) const = default;
};

// "search" or "code"; throws std::invalid_argument otherwise.
ToolKind ParseToolKind(std::string_view name);
std::string_view ToolKindName(ToolKind kind);

struct TaggedText {
  std::string tag;
  std::string content;

  bool operator==(const TaggedText&) const = default;
};

struct Turn {
  std::string think;
  std::optional<TaggedText> tool_call;
  std::optional<TaggedText> tool_result;

  bool operator==(const Turn&) const = default;
};

struct ParsedTrajectory {
  std::vector<Turn> turns;
  std::optional<std::string> answer;
  std::optional<int> confidence_raw;  // [0, 100]
  std::optional<double> confidence;   // confidence_raw / 100
  bool format_valid = false;
  int tool_call_count = 0;

  // Block counts seen by the parser, including malformed confidence blocks.
  int answer_blocks = 0;
  int confidence_blocks = 0;
  std::vector<std::string> violations;

  bool operator==(const ParsedTrajectory&) const = default;
};

struct TrajectoryCase {
  std::string id;
  std::string transcript;
  std::vector<std::string> gold;
  ToolKind tool = ToolKind::kSearch;
};

ParsedTrajectory ParseTrajectory(std::string_view text,
                                 const ToolSchema& schema);

// The extended format constraint. True iff turns exist, every tool call is
// answered by a result within its turn, exactly one answer block follows the
// final turn and exactly one in-range confidence block follows the answer.
bool ValidateFormat(const ParsedTrajectory& traj);

// Canonical tag text: blocks concatenated without separators.
std::string SerializeTrajectory(const ParsedTrajectory& traj);

// Lowercase, strip ASCII punctuation, drop the articles a/an/the, collapse
// whitespace.
std::string NormalizeAnswer(std::string_view text);

// Whole-string match after normalization; substrings earn nothing.
bool ExactMatch(std::string_view pred, const std::vector<std::string>& gold);

}  // namespace car

#endif  // CAR_TRANSCRIPT_H_
