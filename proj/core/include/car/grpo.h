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

// Group-relative advantages and tabular softmax policy-gradient updates.
//
// The policy is a table of logit vectors, one per decision point. An update
// is a plain score-function step weighted by group-normalized advantages; no
// ratio clipping and no reference-policy penalty.

#ifndef CAR_GRPO_H_
#define CAR_GRPO_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "car/rng.h"

namespace car {

struct DecisionPoint {
  std::uint32_t index = 0;
  bool operator==(const DecisionPoint&) const = default;
};

struct ActionChoice {
  DecisionPoint point;
  int action = 0;
};

struct EpisodeOutcome {
  int question_key = 0;
  std::vector<ActionChoice> choices;
  double reward = 0.0;
  bool correct = false;
  int confidence_bin = 0;  // q = bin / 10
};

class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(double learning_rate);

  // Registers a decision point. `rate_scale` multiplies the learning rate for
  // this point only; 0 freezes it.
  DecisionPoint AddPoint(std::string name, std::vector<double> logits,
                         double rate_scale = 1.0);

  // Throws std::out_of_range for unknown points.
  const std::vector<double>& logits(DecisionPoint point) const;
  std::vector<double>& mutable_logits(DecisionPoint point);
  const std::string& name(DecisionPoint point) const;
  double rate_scale(DecisionPoint point) const;
  void set_rate_scale(DecisionPoint point, double scale);

  std::size_t size() const { return logits_.size(); }
  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double rate) { learning_rate_ = rate; }

  // Action probabilities at a point.
  std::vector<double> Probabilities(DecisionPoint point) const;

  bool AllFinite() const;
  bool operator==(const PolicyParams&) const = default;

 private:
  void Check(DecisionPoint point) const;

  double learning_rate_ = 0.05;
  std::vector<std::vector<double>> logits_;
  std::vector<std::string> names_;
  std::vector<double> rate_scales_;
};

std::vector<double> Softmax(std::span<const double> logits);
double LogSoftmax(std::span<const double> logits, int action);

// d/dlogits log softmax(logits)[action] = onehot(action) - softmax(logits).
std::vector<double> LogSoftmaxGradient(std::span<const double> logits,
                                       int action);

// (r_i - mean) / (population std + eps); an all-equal group yields zeros.
// Throws std::invalid_argument for fewer than two rewards.
std::vector<double> GroupAdvantages(std::span<const double> rewards,
                                    double eps = 1e-8);

// One batched step: every episode's chosen actions move by
// learning_rate * rate_scale * A_i * (onehot - softmax), with the softmax
// taken at the incoming parameters.
// Rewards laid out as consecutive groups of `group_size`. Each group is
// centered on its own mean, then the whole batch is divided by one population
// std of the centered values (+ eps). Groups with equal rewards get zeros. A
// single batch-wide scale keeps the estimator free of the per-group
// correlation between a sample and its own normalizer.
std::vector<double> BatchScaledAdvantages(std::span<const double> rewards,
                                          int group_size, double eps = 1e-8);

PolicyParams PolicyGradientStep(const PolicyParams& params,
                                std::span<const EpisodeOutcome> episodes,
                                std::span<const double> advantages);

// Draw from softmax(logits[point]).
int SampleAction(const PolicyParams& params, DecisionPoint point, Rng& rng);

// Cumulative action probabilities of every decision point, computed once.
// Sample() draws exactly what SampleAction would at the same parameters.
class ActionSampler {
 public:
  explicit ActionSampler(const PolicyParams& params);
  int Sample(DecisionPoint point, Rng& rng) const;

 private:
  std::vector<std::vector<double>> cumulative_;
};

// Exact expectation over actions a ~ softmax(logits) of
// (value[a] - value[0]) * grad log pi(a). The constant baseline value[0]
// leaves the expectation unchanged and makes an action-independent value
// produce an exactly zero vector.
std::vector<double> ExpectedScoreGradient(std::span<const double> logits,
                                          std::span<const double> values);

}  // namespace car

#endif  // CAR_GRPO_H_
