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

#include "car/transcript.h"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace car {
namespace {

constexpr std::string_view kThink = "think";
constexpr std::string_view kAnswer = "answer";
constexpr std::string_view kConfidence = "confidence";

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsTagChar(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '-';
}

bool IsAsciiPunct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) ||
         (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

// Integer percent in [0, 100]; anything else (signs, decimals, exponents,
// overflow) is out of format.
std::optional<int> ParsePercent(std::string_view content) {
  const std::string_view digits = Trim(content);
  if (digits.empty() || digits.size() > 3) return std::nullopt;
  int value = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  if (value > 100) return std::nullopt;
  return value;
}

struct Block {
  std::string_view tag;
  std::string_view content;
};

class Scanner {
 public:
  Scanner(std::string_view text, const ToolSchema& schema,
          std::vector<std::string>& violations)
      : text_(text),
        known_{kThink, schema.call_tag, schema.result_tag, kAnswer,
               kConfidence},
        violations_(violations) {}

  std::vector<Block> Run() {
    std::vector<Block> blocks;
    size_t pos = 0;
    while (pos < text_.size()) {
      if (IsSpace(text_[pos])) {
        ++pos;
        continue;
      }
      if (auto block = TryBlock(pos)) {
        blocks.push_back(*block);
        continue;
      }
      if (pos >= text_.size()) break;
      // Stray text or an unknown/closing tag: skip to the next '<'.
      const size_t next = text_.find('<', pos + 1);
      violations_.push_back("unexpected text at offset " +
                            std::to_string(pos));
      pos = next == std::string_view::npos ? text_.size() : next;
    }
    return blocks;
  }

 private:
  bool IsKnown(std::string_view name) const {
    return std::find(known_.begin(), known_.end(), name) != known_.end();
  }

  // Returns the name of an opening tag "<name>" at pos, if any.
  std::optional<std::string_view> OpenTagAt(size_t pos) const {
    if (pos >= text_.size() || text_[pos] != '<') return std::nullopt;
    size_t end = pos + 1;
    while (end < text_.size() && IsTagChar(text_[end])) ++end;
    if (end == pos + 1 || end >= text_.size() || text_[end] != '>') {
      return std::nullopt;
    }
    return text_.substr(pos + 1, end - pos - 1);
  }

  bool ContainsKnownTag(std::string_view content) const {
    for (std::string_view name : known_) {
      const std::string open = "<" + std::string(name) + ">";
      const std::string close = "</" + std::string(name) + ">";
      if (content.find(open) != std::string_view::npos ||
          content.find(close) != std::string_view::npos) {
        return true;
      }
    }
    return false;
  }

  // On success advances pos past the block. On a non-block leaves pos alone.
  // An unclosed known tag consumes the rest of the input.
  std::optional<Block> TryBlock(size_t& pos) {
    const auto name = OpenTagAt(pos);
    if (!name || !IsKnown(*name)) return std::nullopt;
    const size_t body = pos + name->size() + 2;
    const std::string close = "</" + std::string(*name) + ">";
    const size_t end = text_.find(close, body);
    if (end == std::string_view::npos) {
      violations_.push_back("unclosed <" + std::string(*name) + "> at offset " +
                            std::to_string(pos));
      pos = text_.size();
      return std::nullopt;
    }
    Block block{*name, text_.substr(body, end - body)};
    if (ContainsKnownTag(block.content)) {
      violations_.push_back("interleaved tags inside <" + std::string(*name) +
                            "> at offset " + std::to_string(pos));
    }
    pos = end + close.size();
    return block;
  }

  std::string_view text_;
  std::array<std::string_view, 5> known_;
  std::vector<std::string>& violations_;
};

enum class Phase { kTurns, kAfterAnswer, kAfterConfidence };

}  // namespace

ToolSchema ToolSchema::For(ToolKind kind) {
  return kind == ToolKind::kCode ? Code() : Search();
}

void ToolSchema::Validate() const {
  auto check = [](const std::string& tag, const char* field) {
    if (tag.empty()) {
      throw std::invalid_argument(std::string(field) + " must be nonempty");
    }
    if (!std::all_of(tag.begin(), tag.end(), IsTagChar)) {
      throw std::invalid_argument(std::string(field) +
                                  " must not contain brackets or whitespace");
    }
  };
  check(call_tag, "call_tag");
  check(result_tag, "result_tag");
  if (call_tag == result_tag) {
    throw std::invalid_argument("call_tag and result_tag must differ");
  }
  for (std::string_view reserved : {kThink, kAnswer, kConfidence}) {
    if (call_tag == reserved || result_tag == reserved) {
      throw std::invalid_argument("tool tag collides with <" +
                                  std::string(reserved) + ">");
    }
  }
}

ToolKind ParseToolKind(std::string_view name) {
  if (name == "search") return ToolKind::kSearch;
  if (name == "code") return ToolKind::kCode;
  throw std::invalid_argument("unknown tool schema '" + std::string(name) +
                              "' (expected search|code)");
}

std::string_view ToolKindName(ToolKind kind) {
  return kind == ToolKind::kCode ? "code" : "search";
}

ParsedTrajectory ParseTrajectory(std::string_view text,
                                 const ToolSchema& schema) {
  schema.Validate();
  ParsedTrajectory out;
  auto& violations = out.violations;
  const std::vector<Block> blocks = Scanner(text, schema, violations).Run();

  Phase phase = Phase::kTurns;
  for (const Block& block : blocks) {
    const std::string tag(block.tag);
    if (block.tag == kThink) {
      if (phase != Phase::kTurns) {
        violations.push_back("<think> after <answer>");
      }
      out.turns.push_back(Turn{std::string(block.content), {}, {}});
    } else if (tag == schema.call_tag) {
      if (phase != Phase::kTurns) {
        violations.push_back("<" + tag + "> after <answer>");
      }
      if (out.turns.empty() || out.turns.back().tool_call) {
        violations.push_back("<" + tag + "> without a preceding <think>");
        out.turns.push_back(Turn{});
      }
      out.turns.back().tool_call = TaggedText{tag, std::string(block.content)};
    } else if (tag == schema.result_tag) {
      if (out.turns.empty() || !out.turns.back().tool_call ||
          out.turns.back().tool_result) {
        violations.push_back("<" + tag + "> without a matching <" +
                             schema.call_tag + ">");
        continue;
      }
      out.turns.back().tool_result =
          TaggedText{tag, std::string(block.content)};
    } else if (block.tag == kAnswer) {
      ++out.answer_blocks;
      if (out.turns.empty()) violations.push_back("<answer> before any turn");
      if (out.answer_blocks > 1) violations.push_back("duplicate <answer>");
      if (phase == Phase::kAfterConfidence) {
        violations.push_back("<answer> after <confidence>");
      }
      out.answer = std::string(block.content);
      phase = Phase::kAfterAnswer;
    } else if (block.tag == kConfidence) {
      ++out.confidence_blocks;
      if (out.confidence_blocks > 1) {
        violations.push_back("duplicate <confidence>");
      }
      if (phase == Phase::kTurns) {
        violations.push_back("<confidence> before <answer>");
      }
      if (const auto value = ParsePercent(block.content)) {
        out.confidence_raw = *value;
        out.confidence = *value / 100.0;
      } else {
        violations.push_back("<confidence> is not an integer in [0, 100]");
      }
      phase = Phase::kAfterConfidence;
    }
  }
  if (out.turns.empty()) violations.push_back("no turns");
  if (out.answer_blocks == 0) violations.push_back("missing <answer>");
  if (out.confidence_blocks == 0) violations.push_back("missing <confidence>");
  for (const Turn& turn : out.turns) {
    if (turn.tool_call) {
      ++out.tool_call_count;
      if (!turn.tool_result) {
        violations.push_back("<" + turn.tool_call->tag +
                             "> without a following <" + schema.result_tag +
                             ">");
      }
    }
  }
  out.format_valid = ValidateFormat(out);
  return out;
}

bool ValidateFormat(const ParsedTrajectory& traj) {
  if (!traj.violations.empty() || traj.turns.empty()) return false;
  for (const Turn& turn : traj.turns) {
    if (turn.tool_result && !turn.tool_call) return false;
    if (turn.tool_call && !turn.tool_result) return false;
  }
  if (traj.answer_blocks != 1 || !traj.answer) return false;
  if (traj.confidence_blocks != 1 || !traj.confidence_raw ||
      !traj.confidence) {
    return false;
  }
  return *traj.confidence_raw >= 0 && *traj.confidence_raw <= 100;
}

std::string SerializeTrajectory(const ParsedTrajectory& traj) {
  std::string out;
  auto emit = [&out](std::string_view tag, std::string_view content) {
    out.append("<").append(tag).append(">");
    out.append(content);
    out.append("</").append(tag).append(">");
  };
  for (const Turn& turn : traj.turns) {
    emit(kThink, turn.think);
    if (turn.tool_call) emit(turn.tool_call->tag, turn.tool_call->content);
    if (turn.tool_result) {
      emit(turn.tool_result->tag, turn.tool_result->content);
    }
  }
  if (traj.answer) emit(kAnswer, *traj.answer);
  if (traj.confidence_raw) {
    emit(kConfidence, std::to_string(*traj.confidence_raw));
  }
  return out;
}

std::string NormalizeAnswer(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (IsAsciiPunct(u)) continue;
    cleaned.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                           : c);
  }
  std::string out;
  std::string_view rest = cleaned;
  while (!rest.empty()) {
    while (!rest.empty() && IsSpace(rest.front())) rest.remove_prefix(1);
    size_t len = 0;
    while (len < rest.size() && !IsSpace(rest[len])) ++len;
    const std::string_view word = rest.substr(0, len);
    rest.remove_prefix(len);
    if (word.empty() || word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out.append(word);
  }
  return out;
}

bool ExactMatch(std::string_view pred, const std::vector<std::string>& gold) {
  if (gold.empty()) throw std::invalid_argument("gold answer set is empty");
  const std::string normalized = NormalizeAnswer(pred);
  return std::any_of(gold.begin(), gold.end(), [&](const std::string& g) {
    return NormalizeAnswer(g) == normalized;
  });
}

}  // namespace car
