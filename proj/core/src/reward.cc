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

#include "car/reward.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace car {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void CheckConfidence(double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::domain_error("confidence " + std::to_string(q) +
                            " outside [0, 1]");
  }
}

void RequireNonNegative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) +
                                " must be a finite non-negative number");
  }
}

void RequirePositive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) +
                                " must be a finite positive number");
  }
}

}  // namespace

void RewardSpec::Validate() const {
  std::visit(Overloaded{
                 [](const EmOnly&) {},
                 [](const WeightedBrier& f) {
                   RequireNonNegative(f.lambda, "lambda");
                 },
                 [](const Mscr& f) {
                   RequirePositive(f.beta1, "beta1");
                   RequirePositive(f.beta2, "beta2");
                 },
                 [](const SearchPenalty& f) {
                   RequireNonNegative(f.alpha, "alpha");
                 },
             },
             family);
  RequireNonNegative(format_penalty, "format-penalty");
}

std::string_view FamilyName(const RewardFamily& family) {
  return std::visit(Overloaded{
                        [](const EmOnly&) { return std::string_view("em"); },
                        [](const WeightedBrier&) {
                          return std::string_view("weighted-brier");
                        },
                        [](const Mscr&) { return std::string_view("mscr"); },
                        [](const SearchPenalty&) {
                          return std::string_view("search-penalty");
                        },
                    },
                    family);
}

RewardFamily FamilyFromName(std::string_view name) {
  if (name == "em") return EmOnly{};
  if (name == "weighted-brier") return WeightedBrier{};
  if (name == "mscr") return Mscr{};
  if (name == "search-penalty") return SearchPenalty{};
  throw std::invalid_argument(
      "unknown reward '" + std::string(name) +
      "' (expected em|weighted-brier|mscr|search-penalty)");
}

double EmReward(bool correct) { return correct ? 1.0 : 0.0; }

double WeightedBrierReward(bool correct, double q, double lambda) {
  CheckConfidence(q);
  const double target = correct ? 1.0 : 0.0;
  const double gap = q - target;
  return target - lambda * gap * gap;
}

double MscrReward(bool correct, double q, double beta1, double beta2) {
  CheckConfidence(q);
  if (correct) {
    const double miss = 1.0 - q;
    return 1.0 + beta1 * (1.0 - miss * miss);
  }
  return -beta2 * q * q;
}

double SearchPenaltyReward(bool correct, int tool_calls, double alpha) {
  return EmReward(correct) - alpha * tool_calls;
}

RewardBreakdown CalibrationReward(const RewardFamily& family, bool correct,
                                  double q, int tool_calls) {
  CheckConfidence(q);
  RewardBreakdown out;
  out.correct = correct;
  out.confidence_used = q;
  out.outcome_term = EmReward(correct);
  out.calibration_term = std::visit(
      Overloaded{
          [](const EmOnly&) { return 0.0; },
          [&](const WeightedBrier& f) {
            const double gap = q - out.outcome_term;
            return -f.lambda * gap * gap;
          },
          [&](const Mscr& f) {
            const double miss = 1.0 - q;
            return correct ? f.beta1 * (1.0 - miss * miss)
                           : -f.beta2 * q * q;
          },
          [&](const SearchPenalty& f) { return -f.alpha * tool_calls; },
      },
      family);
  out.total = out.outcome_term + out.calibration_term;
  return out;
}

double FamilyReward(const RewardFamily& family, bool correct, double q,
                    int tool_calls) {
  return CalibrationReward(family, correct, q, tool_calls).total;
}

RewardBreakdown UnifiedReward(const ParsedTrajectory& traj,
                              const std::vector<std::string>& gold,
                              const RewardSpec& spec) {
  if (gold.empty()) throw std::invalid_argument("gold answer set is empty");
  const bool correct = traj.answer.has_value() && ExactMatch(*traj.answer, gold);

  double q = 0.0;
  bool fallback = false;
  if (traj.confidence) {
    q = *traj.confidence;
  } else {
    fallback = true;
    switch (spec.fallback) {
      case FallbackPolicy::kWorstCase:
        q = correct ? 0.0 : 1.0;
        break;
    }
  }

  RewardBreakdown out =
      CalibrationReward(spec.family, correct, q, traj.tool_call_count);
  out.used_fallback_confidence = fallback;
  if (!traj.format_valid) {
    out.format_penalty_applied = spec.format_penalty;
    out.total = out.outcome_term + out.calibration_term - spec.format_penalty;
  }
  return out;
}

std::vector<double> ConfidenceGrid(double step) {
  if (!(step > 0.0) || step > 1.0) {
    throw std::invalid_argument("grid step must lie in (0, 1]");
  }
  std::vector<double> grid;
  const double inverse = 1.0 / step;
  const double rounded = std::round(inverse);
  if (std::abs(inverse - rounded) <= 1e-9 * rounded) {
    const auto n = static_cast<long>(rounded);
    grid.reserve(n + 1);
    for (long k = 0; k <= n; ++k) {
      grid.push_back(static_cast<double>(k) / static_cast<double>(n));
    }
    return grid;
  }
  for (long k = 0;; ++k) {
    const double q = k * step;
    if (q >= 1.0) break;
    grid.push_back(q);
  }
  grid.push_back(1.0);
  return grid;
}

double RewardMargin(const RewardSpec& spec, double grid_step) {
  if (!(grid_step > 0.0) || grid_step > 0.1) {
    throw std::invalid_argument("grid_step must lie in (0, 0.1]");
  }
  spec.Validate();
  double min_correct = std::numeric_limits<double>::infinity();
  double max_incorrect = -std::numeric_limits<double>::infinity();
  for (double q : ConfidenceGrid(grid_step)) {
    min_correct = std::min(min_correct, FamilyReward(spec.family, true, q));
    max_incorrect =
        std::max(max_incorrect, FamilyReward(spec.family, false, q));
  }
  return min_correct - max_incorrect;
}

}  // namespace car
