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

// Trajectory-level reward families and the format-aware unified reward.
//
// All confidences here live on the [0, 1] scale; transcripts carry 0..100 and
// are converted by the parser.

#ifndef CAR_REWARD_H_
#define CAR_REWARD_H_

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "car/transcript.h"

namespace car {

struct EmOnly {
  bool operator==(const EmOnly&) const = default;
};

// 1[correct] - lambda * (q - 1[correct])^2.
struct WeightedBrier {
  double lambda = 1.0 / 3.0;
  bool operator==(const WeightedBrier&) const = default;
};

// correct:   1 + beta1 * (1 - (1 - q)^2)
// incorrect: -beta2 * q^2
struct Mscr {
  double beta1 = 0.5;
  double beta2 = 0.5;
  bool operator==(const Mscr&) const = default;
};

// 1[correct] - alpha * tool_calls.
struct SearchPenalty {
  double alpha = 0.1;
  bool operator==(const SearchPenalty&) const = default;
};

using RewardFamily = std::variant<EmOnly, WeightedBrier, Mscr, SearchPenalty>;

// How q is chosen when a format-invalid trajectory carries no usable
// confidence.
enum class FallbackPolicy {
  // q = 0 when correct, q = 1 when incorrect: the lowest calibration term in
  // either branch, so dropping the tag never pays.
  kWorstCase,
};

struct RewardSpec {
  RewardFamily family = Mscr{};
  double format_penalty = 0.5;
  FallbackPolicy fallback = FallbackPolicy::kWorstCase;

  // Throws std::invalid_argument naming the offending hyperparameter.
  void Validate() const;
  bool operator==(const RewardSpec&) const = default;
};

// "em", "weighted-brier", "mscr" or "search-penalty".
std::string_view FamilyName(const RewardFamily& family);

// Family by CLI name with default hyperparameters; throws
// std::invalid_argument for unknown names.
RewardFamily FamilyFromName(std::string_view name);

struct RewardBreakdown {
  double outcome_term = 0.0;
  // Confidence-dependent shaping. For SearchPenalty this slot carries the
  // tool-usage penalty instead.
  double calibration_term = 0.0;
  double format_penalty_applied = 0.0;
  double total = 0.0;
  bool correct = false;
  bool used_fallback_confidence = false;
  double confidence_used = 0.0;
};

double EmReward(bool correct);

// q outside [0, 1] throws std::domain_error.
double WeightedBrierReward(bool correct, double q, double lambda);
double MscrReward(bool correct, double q, double beta1, double beta2);

double SearchPenaltyReward(bool correct, int tool_calls, double alpha);

// Confidence-dependent reward of one outcome under `family`, split into its
// outcome and shaping parts. `tool_calls` only matters for SearchPenalty.
RewardBreakdown CalibrationReward(const RewardFamily& family, bool correct,
                                  double q, int tool_calls = 0);

// Convenience scalar form of CalibrationReward.
double FamilyReward(const RewardFamily& family, bool correct, double q,
                    int tool_calls = 0);

// Format-aware reward of a parsed trajectory against its gold answers.
RewardBreakdown UnifiedReward(const ParsedTrajectory& traj,
                              const std::vector<std::string>& gold,
                              const RewardSpec& spec);

// min_q R(correct, q) - max_q R(incorrect, q) by exhaustive scan of the grid
// {0, step, ..., 1}. `grid_step` must lie in (0, 0.1].
double RewardMargin(const RewardSpec& spec, double grid_step = 0.01);

// {0, step, 2 step, ..., 1}. When 1/step is an integer (to 1e-9) the points
// are k/n exactly; otherwise the last point is clamped to 1.
std::vector<double> ConfidenceGrid(double step);

}  // namespace car

#endif  // CAR_REWARD_H_
