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

#include <random>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace car {
namespace {

using ::testing::ElementsAre;
using ::testing::IsEmpty;
using ::testing::Not;

const ToolSchema kSearch = ToolSchema::Search();

TEST(ParseTrajectoryTest, MinimalValidTranscript) {
  const ParsedTrajectory t = ParseTrajectory(
      "<think>recall capital</think><answer>Paris</answer>"
      "<confidence>90</confidence>",
      kSearch);
  EXPECT_TRUE(t.format_valid);
  ASSERT_EQ(t.turns.size(), 1u);
  EXPECT_EQ(t.turns[0].think, "recall capital");
  EXPECT_EQ(t.answer, "Paris");
  EXPECT_EQ(t.confidence_raw, 90);
  EXPECT_EQ(t.confidence, 0.9);
  EXPECT_EQ(t.tool_call_count, 0);
  EXPECT_THAT(t.violations, IsEmpty());
}

TEST(ParseTrajectoryTest, ToolTurnsAreGrouped) {
  const ParsedTrajectory t = ParseTrajectory(
      "<think>t</think><search>q</search><information>doc</information>"
      "<think>t2</think><answer>A</answer><confidence>75</confidence>",
      kSearch);
  EXPECT_TRUE(t.format_valid);
  ASSERT_EQ(t.turns.size(), 2u);
  ASSERT_TRUE(t.turns[0].tool_call.has_value());
  EXPECT_EQ(*t.turns[0].tool_call, (TaggedText{"search", "q"}));
  EXPECT_EQ(*t.turns[0].tool_result, (TaggedText{"information", "doc"}));
  EXPECT_FALSE(t.turns[1].tool_call.has_value());
  EXPECT_EQ(t.tool_call_count, 1);
}

TEST(ParseTrajectoryTest, MissingConfidenceIsInvalid) {
  const ParsedTrajectory t = ParseTrajectory(
      "<think>t</think><search>q</search><information>doc</information>"
      "<think>t2</think><answer>A</answer>",
      kSearch);
  EXPECT_FALSE(t.format_valid);
  EXPECT_FALSE(t.confidence.has_value());
  EXPECT_FALSE(t.confidence_raw.has_value());
  EXPECT_THAT(t.violations, Not(IsEmpty()));
}

TEST(ParseTrajectoryTest, OutOfRangeConfidenceIsAbsent) {
  const ParsedTrajectory t = ParseTrajectory(
      "<think>t</think><answer>A</answer><confidence>150</confidence>",
      kSearch);
  EXPECT_FALSE(t.format_valid);
  EXPECT_FALSE(t.confidence.has_value());
  EXPECT_EQ(t.confidence_blocks, 1);
}

TEST(ParseTrajectoryTest, LastWellFormedBlocksWin) {
  const ParsedTrajectory t = ParseTrajectory(
      "<think>t</think><answer>x</answer><answer>y</answer>"
      "<confidence>20</confidence><confidence>oops</confidence>",
      kSearch);
  EXPECT_FALSE(t.format_valid);
  EXPECT_EQ(t.answer, "y");
  EXPECT_EQ(t.confidence_raw, 20);
  EXPECT_EQ(t.answer_blocks, 2);
  EXPECT_EQ(t.confidence_blocks, 2);
}

TEST(ParseTrajectoryTest, InterleavedTagsAreInvalid) {
  const ParsedTrajectory t = ParseTrajectory(
      "<think>a <search>q</search> b</think><answer>A</answer>"
      "<confidence>50</confidence>",
      kSearch);
  EXPECT_FALSE(t.format_valid);
}

TEST(ParseTrajectoryTest, CodeSchemaUsesItsOwnTags) {
  const std::string text =
      "<think>c</think><code>print(1)</code><output>1</output>"
      "<think>d</think><answer>1</answer><confidence>99</confidence>";
  EXPECT_TRUE(ParseTrajectory(text, ToolSchema::Code()).format_valid);
  EXPECT_FALSE(ParseTrajectory(text, kSearch).format_valid);
}

TEST(ParseTrajectoryTest, ArbitraryInputNeverThrows) {
  std::mt19937_64 gen(7);
  const std::vector<std::string> pieces = {
      "<think>", "</think>", "<search>", "</search>", "<information>",
      "</information>", "<answer>", "</answer>", "<confidence>",
      "</confidence>", "42", "x", " ", "<", ">", "</", "\n", "100", "-"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    const int len = static_cast<int>(gen() % 24);
    for (int i = 0; i < len; ++i) text += pieces[gen() % pieces.size()];
    ParsedTrajectory t;
    ASSERT_NO_THROW(t = ParseTrajectory(text, kSearch)) << text;
    EXPECT_EQ(t.confidence.has_value(), t.confidence_raw.has_value());
    if (t.confidence_raw) {
      EXPECT_EQ(*t.confidence, *t.confidence_raw / 100.0);
    }
    if (t.format_valid) {
      EXPECT_TRUE(t.answer.has_value());
      EXPECT_TRUE(t.confidence.has_value());
      EXPECT_THAT(t.turns, Not(IsEmpty()));
    }
    int calls = 0;
    for (const Turn& turn : t.turns) calls += turn.tool_call ? 1 : 0;
    EXPECT_EQ(t.tool_call_count, calls);
    EXPECT_EQ(ValidateFormat(t), t.format_valid);
  }
}

TEST(SerializeTrajectoryTest, RoundTripsValidTranscripts) {
  const std::vector<std::string> texts = {
      "<think>a</think><answer>b</answer><confidence>0</confidence>",
      "<think>a</think><search>q</search><information>r</information>"
      "<think>c</think><search>q2</search><information>r2</information>"
      "<think>d</think><answer>e f</answer><confidence>100</confidence>",
  };
  for (const std::string& text : texts) {
    const ParsedTrajectory t = ParseTrajectory(text, kSearch);
    ASSERT_TRUE(t.format_valid);
    EXPECT_EQ(SerializeTrajectory(t), text);
    EXPECT_EQ(ParseTrajectory(SerializeTrajectory(t), kSearch), t);
  }
}

TEST(ToolSchemaTest, RejectsUnusableTags) {
  EXPECT_THROW((ToolSchema{"a", "a"}.Validate()), std::invalid_argument);
  EXPECT_THROW((ToolSchema{"", "b"}.Validate()), std::invalid_argument);
  EXPECT_THROW((ToolSchema{"a b", "c"}.Validate()), std::invalid_argument);
  EXPECT_THROW((ToolSchema{"a<", "c"}.Validate()), std::invalid_argument);
  EXPECT_NO_THROW(ToolSchema::Search().Validate());
  EXPECT_EQ(ParseToolKind("code"), ToolKind::kCode);
  EXPECT_THROW(ParseToolKind("shell"), std::invalid_argument);
}

TEST(NormalizeAnswerTest, StandardQaRules) {
  EXPECT_EQ(NormalizeAnswer("The Eiffel Tower"), "eiffel tower");
  EXPECT_EQ(NormalizeAnswer("  42. "), "42");
  EXPECT_EQ(NormalizeAnswer(""), "");
  EXPECT_EQ(NormalizeAnswer("An apple, a pear"), "apple pear");
}

TEST(NormalizeAnswerTest, Idempotent) {
  std::mt19937_64 gen(3);
  const std::string alphabet = "aAnThe ,.!?-x1 \t";
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    const int len = static_cast<int>(gen() % 20);
    for (int k = 0; k < len; ++k) s += alphabet[gen() % alphabet.size()];
    EXPECT_EQ(NormalizeAnswer(NormalizeAnswer(s)), NormalizeAnswer(s)) << s;
  }
}

TEST(ExactMatchTest, NoSubstringCredit) {
  EXPECT_TRUE(ExactMatch("The Eiffel Tower", {"eiffel tower"}));
  EXPECT_FALSE(ExactMatch("Paris, France", {"paris"}));
  EXPECT_TRUE(ExactMatch("42", {"42"}));
  EXPECT_TRUE(ExactMatch("b", {"a", "B."}));
  EXPECT_THROW(ExactMatch("x", {}), std::invalid_argument);
}

TEST(ExactMatchTest, SymmetricForSingleGold) {
  const std::vector<std::string> words = {"The Cat", "cat", "a dog", "Dog!",
                                          "cat dog"};
  for (const auto& a : words) {
    EXPECT_TRUE(ExactMatch(a, {a}));
    for (const auto& b : words) {
      EXPECT_EQ(ExactMatch(a, {b}), ExactMatch(b, {a})) << a << " / " << b;
    }
  }
}

}  // namespace
}  // namespace car
