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


#include "car/grpo.h"

#include <cmath>
#include <numeric>
#include <random>

#include "car/rng.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace car {
namespace {

using ::testing::DoubleNear;
using ::testing::ElementsAre;
using ::testing::Pointwise;

TEST(GroupAdvantagesTest, WorkedExamples) {
  EXPECT_THAT(GroupAdvantages(std::vector<double>{1, 1, 1, 1}),
              ElementsAre(0, 0, 0, 0));
  EXPECT_THAT(GroupAdvantages(std::vector<double>{0, 2}),
              Pointwise(DoubleNear(1e-7), {-1.0, 1.0}));
  EXPECT_THAT(GroupAdvantages(std::vector<double>{1, 0, 1, 0}),
              Pointwise(DoubleNear(1e-7), {1.0, -1.0, 1.0, -1.0}));
  EXPECT_THROW(GroupAdvantages(std::vector<double>{1}), std::invalid_argument);
}

TEST(GroupAdvantagesTest, ZeroSumAndShiftInvariant) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> rewards(2 + trial % 15);
    for (double& r : rewards) r = normal(gen);
    const auto adv = GroupAdvantages(rewards);
    EXPECT_NEAR(std::accumulate(adv.begin(), adv.end(), 0.0), 0.0, 1e-9);
    const double shift = normal(gen) * 10;
    for (double& r : rewards) r += shift;
    EXPECT_THAT(GroupAdvantages(rewards), Pointwise(DoubleNear(1e-9), adv));
  }
}

TEST(BatchScaledAdvantagesTest, CentersEachGroupWithOneScale) {
  const std::vector<double> rewards = {0, 2, 5, 5, 1, 3};
  const auto adv = BatchScaledAdvantages(rewards, 2);
  // Centered: -1, 1, 0, 0, -1, 1; population std over six values is sqrt(2/3).
  const double s = std::sqrt(4.0 / 6.0) + 1e-8;
  EXPECT_THAT(adv, Pointwise(DoubleNear(1e-12),
                             {-1 / s, 1 / s, 0.0, 0.0, -1 / s, 1 / s}));
  EXPECT_THROW(BatchScaledAdvantages(rewards, 4), std::invalid_argument);
  EXPECT_THROW(BatchScaledAdvantages(rewards, 1), std::invalid_argument);
  EXPECT_THAT(BatchScaledAdvantages(std::vector<double>{3, 3, 3, 3}, 2),
              ElementsAre(0, 0, 0, 0));
}

TEST(SoftmaxTest, SumsToOneAndIsStable) {
  const std::vector<double> logits = {1000.0, 999.0, -1000.0};
  const auto pi = Softmax(logits);
  EXPECT_NEAR(std::accumulate(pi.begin(), pi.end(), 0.0), 1.0, 1e-12);
  EXPECT_NEAR(pi[0] / pi[1], std::exp(1.0), 1e-9);
  EXPECT_NEAR(LogSoftmax(logits, 2), -2000.0 - std::log1p(std::exp(-1.0)),
              1e-9);
}

TEST(LogSoftmaxGradientTest, MatchesCentralDifferences) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> normal(0.0, 3.0);
  constexpr double kH = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(2 + trial % 10);
    for (double& z : logits) z = normal(gen);
    const int action = static_cast<int>(gen() % logits.size());
    const auto grad = LogSoftmaxGradient(logits, action);
    for (size_t j = 0; j < logits.size(); ++j) {
      auto up = logits;
      auto down = logits;
      up[j] += kH;
      down[j] -= kH;
      const double fd =
          (LogSoftmax(up, action) - LogSoftmax(down, action)) / (2 * kH);
      EXPECT_NEAR(grad[j], fd, 1e-6);
    }
  }
}

TEST(ExpectedScoreGradientTest, ActionIndependentValueGivesExactZero) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(11);
    for (double& z : logits) z = normal(gen);
    const double value = normal(gen);
    const std::vector<double> values(11, value);
    for (double g : ExpectedScoreGradient(logits, values)) EXPECT_EQ(g, 0.0);
  }
}

TEST(ExpectedScoreGradientTest, MatchesDerivativeOfExpectedValue) {
  const std::vector<double> logits = {0.3, -1.0, 2.0};
  const std::vector<double> values = {1.0, 4.0, -2.0};
  const auto grad = ExpectedScoreGradient(logits, values);
  auto expected = [&](std::vector<double> z) {
    const auto pi = Softmax(z);
    return pi[0] * values[0] + pi[1] * values[1] + pi[2] * values[2];
  };
  for (size_t j = 0; j < logits.size(); ++j) {
    auto up = logits;
    auto down = logits;
    up[j] += 1e-6;
    down[j] -= 1e-6;
    EXPECT_NEAR(grad[j], (expected(up) - expected(down)) / 2e-6, 1e-8);
  }
}

TEST(PolicyGradientStepTest, ZeroAdvantagesLeaveParamsUnchanged) {
  PolicyParams params(0.1);
  const DecisionPoint p = params.AddPoint("p", {0.1, 0.2, 0.3});
  const std::vector<EpisodeOutcome> episodes = {{0, {{p, 1}}, 1.0, true, 0}};
  const std::vector<double> adv = {0.0};
  EXPECT_EQ(PolicyGradientStep(params, episodes, adv), params);
}

TEST(PolicyGradientStepTest, PositiveAdvantageRaisesChosenAction) {
  PolicyParams params(0.1);
  const DecisionPoint p = params.AddPoint("p", {0.0, 0.0});
  const std::vector<EpisodeOutcome> episodes = {{0, {{p, 1}}, 1.0, true, 0}};
  const std::vector<double> adv = {1.0};
  const PolicyParams next = PolicyGradientStep(params, episodes, adv);
  EXPECT_GT(next.Probabilities(p)[1], 0.5);
  EXPECT_THAT(next.logits(p), Pointwise(DoubleNear(1e-15), {-0.05, 0.05}));
}

TEST(PolicyGradientStepTest, RateScaleFreezesPoint) {
  PolicyParams params(0.5);
  const DecisionPoint frozen = params.AddPoint("frozen", {0.0, 0.0}, 0.0);
  const DecisionPoint live = params.AddPoint("live", {0.0, 0.0});
  const std::vector<EpisodeOutcome> episodes = {
      {0, {{frozen, 0}, {live, 0}}, 1.0, true, 0}};
  const std::vector<double> adv = {2.0};
  const PolicyParams next = PolicyGradientStep(params, episodes, adv);
  EXPECT_EQ(next.logits(frozen), params.logits(frozen));
  EXPECT_NE(next.logits(live), params.logits(live));
}

TEST(PolicyGradientStepTest, StaysFiniteAndValidatesInput) {
  PolicyParams params(1.0);
  const DecisionPoint p = params.AddPoint("p", std::vector<double>(11, 0.0));
  std::mt19937_64 gen(8);
  for (int step = 0; step < 2000; ++step) {
    std::vector<EpisodeOutcome> episodes;
    std::vector<double> adv;
    for (int i = 0; i < 8; ++i) {
      episodes.push_back({0, {{p, static_cast<int>(gen() % 11)}}, 0, false, 0});
      adv.push_back(static_cast<double>(gen() % 7) - 3.0);
    }
    params = PolicyGradientStep(params, episodes, adv);
  }
  EXPECT_TRUE(params.AllFinite());
  const std::vector<EpisodeOutcome> bad = {{0, {{p, 11}}, 0, false, 0}};
  const std::vector<double> one = {1.0};
  EXPECT_THROW(PolicyGradientStep(params, bad, one), std::out_of_range);
  EXPECT_THROW(PolicyGradientStep(params, bad, {}), std::invalid_argument);
}

TEST(SampleActionTest, FrequenciesAndDeterminism) {
  PolicyParams params;
  const DecisionPoint dominant = params.AddPoint("d", {50.0, 0.0});
  const DecisionPoint uniform = params.AddPoint("u", {0.0, 0.0});
  Rng rng(42);
  int zeros = 0;
  int ones = 0;
  for (int i = 0; i < 10000; ++i) {
    zeros += SampleAction(params, dominant, rng) == 0;
    ones += SampleAction(params, uniform, rng) == 1;
  }
  EXPECT_GE(zeros, 9990);
  EXPECT_NEAR(ones / 10000.0, 0.5, 0.02);

  Rng a(7);
  Rng b(7);
  const ActionSampler sampler(params);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(SampleAction(params, uniform, a), sampler.Sample(uniform, b));
  }
  EXPECT_THROW(SampleAction(params, DecisionPoint{9}, a), std::out_of_range);
}

}  // namespace
}  // namespace car
