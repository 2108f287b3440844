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

#include "car/oracle.h"

#include <cmath>
#include <stdexcept>

namespace car {
namespace {

void CheckProbability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error(std::string(name) + " outside [0, 1]");
  }
}

}  // namespace

double ExpectedReward(const RewardSpec& spec, double p, double q) {
  CheckProbability(p, "belief p");
  CheckProbability(q, "confidence q");
  return p * FamilyReward(spec.family, true, q) +
         (1.0 - p) * FamilyReward(spec.family, false, q);
}

GridOptimum OptimalConfidenceGrid(const RewardSpec& spec, double p,
                                  double step) {
  if (!(step > 0.0) || step > 0.1) {
    throw std::invalid_argument("grid step must lie in (0, 0.1]");
  }
  GridOptimum best;
  bool first = true;
  double lowest = 0.0;
  for (double q : ConfidenceGrid(step)) {
    const double value = ExpectedReward(spec, p, q);
    if (first || value > best.expected_reward) {
      best.q = q;
      best.expected_reward = value;
    }
    lowest = first ? value : std::min(lowest, value);
    first = false;
  }
  best.flat = best.expected_reward == lowest;
  return best;
}

std::optional<double> OptimalConfidenceClosed(const RewardSpec& spec,
                                              double p) {
  CheckProbability(p, "belief p");
  if (const auto* wb = std::get_if<WeightedBrier>(&spec.family)) {
    if (wb->lambda == 0.0) return std::nullopt;
    return p;
  }
  if (const auto* m = std::get_if<Mscr>(&spec.family)) {
    // d/dq [p b1 (2q - q^2) - (1 - p) b2 q^2] = 0.
    const double num = m->beta1 * p;
    const double den = num + m->beta2 * (1.0 - p);
    return den == 0.0 ? 0.0 : num / den;
  }
  return std::nullopt;
}

IncentiveProfile ProprietyCheck(const RewardSpec& spec, double tolerance,
                                double p_step, double step) {
  spec.Validate();
  IncentiveProfile profile;
  profile.spec = spec;
  profile.tolerance = tolerance;
  profile.step = step;
  bool all_flat = true;
  for (double p : ConfidenceGrid(p_step)) {
    const GridOptimum opt = OptimalConfidenceGrid(spec, p, step);
    all_flat = all_flat && opt.flat;
    profile.points.push_back({p, opt.q, opt.expected_reward});
    const double gap = std::abs(opt.q - p);
    if (gap > profile.max_truthfulness_gap) {
      profile.max_truthfulness_gap = gap;
      profile.gap_argmax_p = p;
    }
  }
  profile.flat = all_flat;
  profile.proper = !all_flat && profile.max_truthfulness_gap <= tolerance;
  return profile;
}

}  // namespace car
