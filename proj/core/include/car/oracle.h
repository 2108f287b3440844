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

// Incentive analysis of reward families.
//
// An agent that believes it is correct with probability p and reports q
// collects expected reward p R(correct, q) + (1 - p) R(incorrect, q). A family
// is proper when the report maximizing that expectation is q = p. Two routes
// locate the optimum: an exhaustive grid scan and the first-order condition
// in closed form. They are kept independent so each can check the other.

#ifndef CAR_ORACLE_H_
#define CAR_ORACLE_H_

#include <optional>
#include <vector>

#include "car/reward.h"

namespace car {

// Domain errors when p or q leave [0, 1].
double ExpectedReward(const RewardSpec& spec, double p, double q);

struct GridOptimum {
  double q = 0.0;  // smallest maximizer on the grid
  double expected_reward = 0.0;
  bool flat = false;  // expectation does not vary with q
};

GridOptimum OptimalConfidenceGrid(const RewardSpec& spec, double p,
                                  double step = 0.001);

// nullopt means the family is flat in q (EmOnly, WeightedBrier with
// lambda = 0, SearchPenalty).
std::optional<double> OptimalConfidenceClosed(const RewardSpec& spec,
                                              double p);

struct IncentivePoint {
  double p = 0.0;
  double optimal_q = 0.0;
  double expected_reward = 0.0;
};

struct IncentiveProfile {
  RewardSpec spec;
  std::vector<IncentivePoint> points;  // one per belief on the p grid
  bool flat = false;
  bool proper = false;
  double max_truthfulness_gap = 0.0;
  double gap_argmax_p = 0.0;
  double tolerance = 0.0;
  double step = 0.0;
};

IncentiveProfile ProprietyCheck(const RewardSpec& spec,
                                double tolerance = 0.005,
                                double p_step = 0.05, double step = 0.001);

}  // namespace car

#endif  // CAR_ORACLE_H_
