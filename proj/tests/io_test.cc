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


#include "car/io.h"

#include <sstream>
#include <string>

#include "gtest/gtest.h"

namespace car {
namespace {

template <typename Fn>
std::string ErrorOf(Fn fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(ReadLinesTest, SkipsBlankLinesAndStripsCarriageReturns) {
  std::istringstream in("a\r\n\n  \nb\n");
  EXPECT_EQ(ReadLines(in), (std::vector<std::string>{"a", "b"}));
}

TEST(TrajectoryCaseTest, RoundTrip) {
  TrajectoryCase c;
  c.id = "q\"1";
  c.transcript = "<think>x</think><answer>A</answer><confidence>10</confidence>";
  c.gold = {"A", "a"};
  c.tool = ToolKind::kCode;
  const TrajectoryCase back = ParseTrajectoryCase(TrajectoryCaseJson(c), 1);
  EXPECT_EQ(back.id, c.id);
  EXPECT_EQ(back.transcript, c.transcript);
  EXPECT_EQ(back.gold, c.gold);
  EXPECT_EQ(back.tool, c.tool);
}

TEST(TrajectoryCaseTest, ErrorsNameLineAndField) {
  const std::string msg = ErrorOf([] {
    ParseTrajectoryCase(R"({"id": "x", "transcript": "t"})", 7);
  });
  EXPECT_NE(msg.find("7"), std::string::npos);
  EXPECT_NE(msg.find("gold"), std::string::npos);
  EXPECT_THROW(ParseTrajectoryCase("not json", 1), InputError);
  EXPECT_THROW(
      ParseTrajectoryCase(R"({"id": "x", "transcript": "t", "gold": []})", 1),
      InputError);
}

TEST(TrajectoryCaseTest, DefaultToolSchemaApplies) {
  const auto c = ParseTrajectoryCase(
      R"({"id": "x", "transcript": "t", "gold": ["a"]})", 1, ToolKind::kCode);
  EXPECT_EQ(c.tool, ToolKind::kCode);
}

TEST(PredictionTest, RoundTripIsBitExact) {
  PredictionRecord r{"id-1", 0.1 + 0.2, true, "mscr"};
  EXPECT_EQ(ParsePrediction(PredictionJson(r), 1), r);
  PredictionRecord bare{"id-2", 1.0 / 3.0, false, std::nullopt};
  EXPECT_EQ(ParsePrediction(PredictionJson(bare), 1), bare);
}

TEST(PredictionTest, RejectsBadValues) {
  EXPECT_THROW(
      ParsePrediction(R"({"id": "a", "confidence": 1.5, "correct": true})", 1),
      InputError);
  EXPECT_THROW(
      ParsePrediction(R"({"id": "a", "confidence": 0.5, "correct": 1})", 1),
      InputError);
  EXPECT_THROW(ParsePrediction(R"({"confidence": 0.5, "correct": true})", 1),
               InputError);
}

TEST(TrainConfigTest, RoundTrip) {
  TrainConfig config;
  config.env.kind = VerificationEnv{0.3, 0.7, 2};
  config.env.n_archetypes = 5;
  config.reward.family = WeightedBrier{0.25};
  config.reward.format_penalty = 0.75;
  config.iterations = 17;
  config.questions_per_iteration = 33;
  config.advantage_scaling = AdvantageScaling::kGroupStd;
  config.seed = 99;
  config.init.overconfident_mass.reset();
  config.init.feedback_conditioned = false;
  config.init.confidence_rate_scale = 0.3;
  bool seed_present = false;
  const TrainConfig back =
      ParseTrainConfig(TrainConfigJson(config), &seed_present);
  EXPECT_TRUE(seed_present);
  EXPECT_EQ(TrainConfigJson(back), TrainConfigJson(config));
  EXPECT_EQ(back.env, config.env);
  EXPECT_EQ(back.reward, config.reward);
  EXPECT_EQ(back.advantage_scaling, AdvantageScaling::kGroupStd);
  EXPECT_FALSE(back.init.overconfident_mass.has_value());
}

TEST(TrainConfigTest, EmptyDocumentKeepsDefaults) {
  bool seed_present = true;
  const TrainConfig config = ParseTrainConfig("{}", &seed_present);
  EXPECT_FALSE(seed_present);
  EXPECT_EQ(TrainConfigJson(config), TrainConfigJson(TrainConfig{}));
}

TEST(TrainConfigTest, ErrorsNameTheField) {
  EXPECT_NE(ErrorOf([] { ParseTrainConfig(R"({"env": {"rho": 2}})"); })
                .find("rho"),
            std::string::npos);
  EXPECT_NE(ErrorOf([] { ParseTrainConfig(R"({"itterations": 3})"); })
                .find("itterations"),
            std::string::npos);
  EXPECT_NE(ErrorOf([] {
              ParseTrainConfig(R"({"reward": {"family": "mscr", "beta1": -1}})");
            }).find("beta1"),
            std::string::npos);
  EXPECT_NE(ErrorOf([] { ParseTrainConfig(R"({"advantage_scaling": "x"})"); })
                .find("advantage_scaling"),
            std::string::npos);
  EXPECT_NE(ErrorOf([] { ParseTrainConfig(R"({"group_size": 2.5})"); })
                .find("group_size"),
            std::string::npos);
  EXPECT_THROW(ParseTrainConfig("{"), ConfigError);
}

TEST(TrainLogTest, CsvHasHeaderAndEmptyCellsForUndefined) {
  TrainLog log;
  log.rows.push_back({0, std::nullopt, 0.5, 0.1, 0.2, std::nullopt, 0.7, 0.8});
  log.rows.push_back({10, 0.25, 0.6, 0.1, 0.2, 0.55, std::nullopt, 0.7});
  const std::string csv = TrainLogCsv(log);
  std::istringstream in(csv);
  const auto lines = ReadLines(in);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].rfind("iteration,", 0), 0u);
  EXPECT_EQ(lines[1].rfind("0,,", 0), 0u);
  EXPECT_NE(TrainLogJson(log).find("null"), std::string::npos);
}

TEST(ReportJsonTest, UndefinedMetricsAreNull) {
  const std::vector<PredictionRecord> records = {{"a", 0.9, true, {}},
                                                 {"b", 0.4, true, {}}};
  const std::string json = ReportJson(BuildReport(records));
  EXPECT_NE(json.find("\"auroc\": null"), std::string::npos);
  EXPECT_NE(json.find("\"mcip\": null"), std::string::npos);
}

}  // namespace
}  // namespace car
