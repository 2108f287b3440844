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

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace car {

PolicyParams::PolicyParams(double learning_rate)
    : learning_rate_(learning_rate) {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be finite and >= 0");
  }
}

DecisionPoint PolicyParams::AddPoint(std::string name,
                                     std::vector<double> logits,
                                     double rate_scale) {
  if (logits.empty()) {
    throw std::invalid_argument("decision point '" + name +
                                "' needs at least one action");
  }
  const DecisionPoint point{static_cast<std::uint32_t>(logits_.size())};
  logits_.push_back(std::move(logits));
  names_.push_back(std::move(name));
  rate_scales_.push_back(rate_scale);
  return point;
}

void PolicyParams::Check(DecisionPoint point) const {
  if (point.index >= logits_.size()) {
    throw std::out_of_range("unknown decision point " +
                            std::to_string(point.index));
  }
}

const std::vector<double>& PolicyParams::logits(DecisionPoint point) const {
  Check(point);
  return logits_[point.index];
}

std::vector<double>& PolicyParams::mutable_logits(DecisionPoint point) {
  Check(point);
  return logits_[point.index];
}

const std::string& PolicyParams::name(DecisionPoint point) const {
  Check(point);
  return names_[point.index];
}

double PolicyParams::rate_scale(DecisionPoint point) const {
  Check(point);
  return rate_scales_[point.index];
}

void PolicyParams::set_rate_scale(DecisionPoint point, double scale) {
  Check(point);
  rate_scales_[point.index] = scale;
}

std::vector<double> PolicyParams::Probabilities(DecisionPoint point) const {
  return Softmax(logits(point));
}

bool PolicyParams::AllFinite() const {
  for (const auto& row : logits_) {
    for (double v : row) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::vector<double> Softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double LogSoftmax(std::span<const double> logits, int action) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - peak);
  return logits[action] - peak - std::log(total);
}

std::vector<double> LogSoftmaxGradient(std::span<const double> logits,
                                       int action) {
  std::vector<double> grad = Softmax(logits);
  for (double& g : grad) g = -g;
  grad[action] += 1.0;
  return grad;
}

std::vector<double> GroupAdvantages(std::span<const double> rewards,
                                    double eps) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("a group needs at least two rewards");
  }
  std::vector<double> out(rewards.size(), 0.0);
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards[0]; })) {
    return out;
  }
  const auto n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double denom = std::sqrt(ss / n) + eps;
  for (size_t i = 0; i < rewards.size(); ++i) {
    out[i] = (rewards[i] - mean) / denom;
  }
  return out;
}

std::vector<double> BatchScaledAdvantages(std::span<const double> rewards,
                                          int group_size, double eps) {
  if (group_size < 2) {
    throw std::invalid_argument("a group needs at least two rewards");
  }
  const auto g = static_cast<size_t>(group_size);
  if (rewards.empty() || rewards.size() % g != 0) {
    throw std::invalid_argument("reward count must be a multiple of group_size");
  }
  std::vector<double> out(rewards.size(), 0.0);
  double ss = 0.0;
  for (size_t start = 0; start < rewards.size(); start += g) {
    const auto group = rewards.subspan(start, g);
    if (std::all_of(group.begin(), group.end(),
                    [&](double r) { return r == group[0]; })) {
      continue;
    }
    double mean = 0.0;
    for (double r : group) mean += r;
    mean /= static_cast<double>(g);
    for (size_t i = 0; i < g; ++i) {
      out[start + i] = group[i] - mean;
      ss += out[start + i] * out[start + i];
    }
  }
  const double denom =
      std::sqrt(ss / static_cast<double>(rewards.size())) + eps;
  for (double& a : out) a /= denom;
  return out;
}

PolicyParams PolicyGradientStep(const PolicyParams& params,
                                std::span<const EpisodeOutcome> episodes,
                                std::span<const double> advantages) {
  if (episodes.size() != advantages.size()) {
    throw std::invalid_argument("one advantage per episode required");
  }
  PolicyParams next = params;
  // Softmax cache at the incoming parameters, filled on first visit.
  std::vector<std::vector<double>> probs(params.size());
  for (size_t i = 0; i < episodes.size(); ++i) {
    const double adv = advantages[i];
    if (adv == 0.0) continue;
    for (const ActionChoice& choice : episodes[i].choices) {
      const auto& logits = params.logits(choice.point);
      if (choice.action < 0 ||
          choice.action >= static_cast<int>(logits.size())) {
        throw std::out_of_range("action index out of range at '" +
                                params.name(choice.point) + "'");
      }
      const double rate =
          params.learning_rate() * params.rate_scale(choice.point);
      if (rate == 0.0) continue;
      auto& pi = probs[choice.point.index];
      if (pi.empty()) pi = Softmax(logits);
      auto& out = next.mutable_logits(choice.point);
      for (size_t a = 0; a < out.size(); ++a) {
        const double indicator = static_cast<int>(a) == choice.action ? 1 : 0;
        out[a] += rate * adv * (indicator - pi[a]);
      }
    }
  }
  return next;
}

int SampleAction(const PolicyParams& params, DecisionPoint point, Rng& rng) {
  const std::vector<double> pi = params.Probabilities(point);
  const double u = rng.Uniform();
  double cumulative = 0.0;
  for (size_t a = 0; a + 1 < pi.size(); ++a) {
    cumulative += pi[a];
    if (u < cumulative) return static_cast<int>(a);
  }
  return static_cast<int>(pi.size()) - 1;
}

ActionSampler::ActionSampler(const PolicyParams& params)
    : cumulative_(params.size()) {
  for (size_t p = 0; p < params.size(); ++p) {
    const std::vector<double> pi =
        params.Probabilities(DecisionPoint{static_cast<std::uint32_t>(p)});
    auto& cum = cumulative_[p];
    cum.resize(pi.size() - 1);
    double cumulative = 0.0;
    for (size_t a = 0; a + 1 < pi.size(); ++a) {
      cumulative += pi[a];
      cum[a] = cumulative;
    }
  }
}

int ActionSampler::Sample(DecisionPoint point, Rng& rng) const {
  const auto& cum = cumulative_.at(point.index);
  const double u = rng.Uniform();
  for (size_t a = 0; a < cum.size(); ++a) {
    if (u < cum[a]) return static_cast<int>(a);
  }
  return static_cast<int>(cum.size());
}

std::vector<double> ExpectedScoreGradient(std::span<const double> logits,
                                          std::span<const double> values) {
  if (values.size() != logits.size()) {
    throw std::invalid_argument("one value per action required");
  }
  const std::vector<double> pi = Softmax(logits);
  std::vector<double> grad(logits.size(), 0.0);
  for (size_t a = 0; a < logits.size(); ++a) {
    const double weight = pi[a] * (values[a] - values[0]);
    if (weight == 0.0) continue;
    const std::vector<double> g = LogSoftmaxGradient(logits, static_cast<int>(a));
    for (size_t k = 0; k < grad.size(); ++k) grad[k] += weight * g[k];
  }
  return grad;
}

}  // namespace car
