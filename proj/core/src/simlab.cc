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

#include "car/simlab.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "car/parallel.h"
#include "car/stats.h"

namespace car {
namespace {

// Stream tags under the master seed.
constexpr std::uint64_t kArchetypeStream = 1;
constexpr std::uint64_t kRolloutStream = 2;
constexpr std::uint64_t kEvalStream = 3;
constexpr int kGroupsPerStream = 16;

void RequireProbability(double v, const std::string& field) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(field + " must lie in [0, 1]");
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t EnvSalt(const EnvSpec& env) { return Mix64(env.seed); }

}  // namespace

void EnvSpec::Validate() const {
  std::visit(Overloaded{
                 [](const EvidenceEnv& e) {
                   RequireProbability(e.rho, "env.rho");
                   RequireProbability(e.p_direct, "env.p_direct");
                   RequireProbability(e.p_good, "env.p_good");
                   RequireProbability(e.p_bad, "env.p_bad");
                 },
                 [](const VerificationEnv& v) {
                   RequireProbability(v.p0, "env.p0");
                   RequireProbability(v.gamma, "env.gamma");
                   if (v.budget < 0) {
                     throw std::invalid_argument("env.budget must be >= 0");
                   }
                 },
             },
             kind);
  if (n_archetypes < 1) {
    throw std::invalid_argument("env.n_archetypes must be positive");
  }
}

std::string_view FeedbackStateName(FeedbackState state) {
  switch (state) {
    case FeedbackState::kNone:
      return "none";
    case FeedbackState::kToolUsed:
      return "tool_used";
    case FeedbackState::kPassObserved:
      return "pass_observed";
    case FeedbackState::kFailThenPass:
      return "fail_then_pass";
    case FeedbackState::kExhausted:
      return "exhausted";
  }
  return "unknown";
}

double ExpectedAccuracy(const EnvSpec& env, double tool_probability) {
  return std::visit(
      Overloaded{
          [&](const EvidenceEnv& e) {
            const double with_tool = e.rho * e.p_good + (1.0 - e.rho) * e.p_bad;
            return tool_probability * with_tool +
                   (1.0 - tool_probability) * e.p_direct;
          },
          [&](const VerificationEnv& v) {
            // Each caught failure buys another draw while budget lasts.
            const double caught = (1.0 - v.p0) * v.gamma;
            double with_tool = 0.0;
            double reach = 1.0;
            for (int k = 0; k <= v.budget; ++k) {
              with_tool += reach * v.p0;
              reach *= caught;
            }
            return tool_probability * with_tool +
                   (1.0 - tool_probability) * v.p0;
          },
      },
      env.kind);
}

std::vector<double> OverconfidentLogits(double mass) {
  if (!(mass > 2.0 / kConfidenceBins && mass < 1.0)) {
    throw std::invalid_argument("overconfident mass must lie in (2/11, 1)");
  }
  auto top_mass = [](double slope) {
    double total = 0.0;
    for (int b = 0; b < kConfidenceBins; ++b) total += std::exp(slope * b);
    return (std::exp(slope * 9) + std::exp(slope * 10)) / total;
  };
  double lo = 0.0;
  double hi = 20.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (top_mass(mid) < mass ? lo : hi) = mid;
  }
  const double slope = 0.5 * (lo + hi);
  std::vector<double> logits(kConfidenceBins);
  for (int b = 0; b < kConfidenceBins; ++b) logits[b] = slope * b;
  return logits;
}

SimPolicy SimPolicy::Create(int n_archetypes, double learning_rate,
                            const PolicyInit& init) {
  if (n_archetypes < 1) {
    throw std::invalid_argument("n_archetypes must be positive");
  }
  SimPolicy policy;
  policy.params_ = PolicyParams(learning_rate);
  policy.feedback_conditioned_ = init.feedback_conditioned;
  const std::vector<double> confidence_init =
      init.overconfident_mass ? OverconfidentLogits(*init.overconfident_mass)
                              : std::vector<double>(kConfidenceBins, 0.0);
  for (int a = 0; a < n_archetypes; ++a) {
    const std::string prefix = "archetype" + std::to_string(a);
    policy.tool_points_.push_back(policy.params_.AddPoint(
        prefix + "/tool", {init.direct_logit, init.tool_logit},
        init.tool_rate_scale));
    std::array<DecisionPoint, kFeedbackStates> heads{};
    if (init.feedback_conditioned) {
      for (int s = 0; s < kFeedbackStates; ++s) {
        heads[s] = policy.params_.AddPoint(
            prefix + "/confidence/" +
                std::string(FeedbackStateName(static_cast<FeedbackState>(s))),
            confidence_init, init.confidence_rate_scale);
      }
    } else {
      heads.fill(policy.params_.AddPoint(prefix + "/confidence/blind",
                                         confidence_init,
                                         init.confidence_rate_scale));
    }
    policy.confidence_points_.push_back(heads);
  }
  return policy;
}

DecisionPoint SimPolicy::ToolPoint(int archetype) const {
  return tool_points_.at(archetype);
}

DecisionPoint SimPolicy::ConfidencePoint(int archetype,
                                         FeedbackState state) const {
  return confidence_points_.at(archetype).at(static_cast<int>(state));
}

double SimPolicy::ToolProbability(int archetype) const {
  return params_.Probabilities(ToolPoint(archetype))[1];
}

double SimPolicy::MeanConfidence(int archetype, FeedbackState state) const {
  const auto pi = params_.Probabilities(ConfidencePoint(archetype, state));
  double mean = 0.0;
  for (int b = 0; b < kConfidenceBins; ++b) mean += pi[b] * (b / 10.0);
  return mean;
}

SimEpisode RunEpisode(const EnvSpec& env, const SimPolicy& policy, Rng& rng,
                      const RewardFamily& reward,
                      std::optional<int> archetype) {
  return RunEpisode(env, policy, ActionSampler(policy.params()), rng, reward,
                    archetype);
}

SimEpisode RunEpisode(const EnvSpec& env, const SimPolicy& policy,
                      const ActionSampler& sampler, Rng& rng,
                      const RewardFamily& reward,
                      std::optional<int> archetype) {
  if (policy.n_archetypes() != env.n_archetypes) {
    throw std::invalid_argument("policy and environment archetype counts differ");
  }
  const int a = archetype ? *archetype
                          : static_cast<int>(rng.Below(env.n_archetypes));
  SimEpisode ep;
  ep.outcome.question_key = a;
  const DecisionPoint tool_point = policy.ToolPoint(a);
  const int tool_action = sampler.Sample(tool_point, rng);
  ep.outcome.choices.push_back({tool_point, tool_action});
  const bool use_tool = tool_action == static_cast<int>(ToolAction::kTool);

  bool correct = false;
  std::visit(Overloaded{
                 [&](const EvidenceEnv& e) {
                   if (!use_tool) {
                     correct = rng.Bernoulli(e.p_direct);
                     ep.feedback = FeedbackState::kNone;
                     return;
                   }
                   ep.tool_calls = 1;
                   const bool faithful = rng.Bernoulli(e.rho);
                   correct = rng.Bernoulli(faithful ? e.p_good : e.p_bad);
                   ep.feedback = FeedbackState::kToolUsed;
                 },
                 [&](const VerificationEnv& v) {
                   if (!use_tool) {
                     correct = rng.Bernoulli(v.p0);
                     ep.feedback = FeedbackState::kNone;
                     return;
                   }
                   int remaining = v.budget;
                   bool saw_failure = false;
                   while (true) {
                     ++ep.tool_calls;
                     correct = rng.Bernoulli(v.p0);
                     // Correct candidates always pass; wrong ones are caught
                     // with probability gamma.
                     if (correct || !rng.Bernoulli(v.gamma)) {
                       ep.feedback = saw_failure ? FeedbackState::kFailThenPass
                                                 : FeedbackState::kPassObserved;
                       return;
                     }
                     saw_failure = true;
                     if (remaining == 0) {
                       ep.feedback = FeedbackState::kExhausted;
                       return;
                     }
                     --remaining;
                   }
                 },
             },
             env.kind);

  const DecisionPoint head = policy.ConfidencePoint(a, ep.feedback);
  const int bin = sampler.Sample(head, rng);
  ep.outcome.choices.push_back({head, bin});
  ep.outcome.confidence_bin = bin;
  ep.outcome.correct = correct;
  ep.outcome.reward =
      FamilyReward(reward, correct, bin / 10.0, ep.tool_calls);
  return ep;
}

std::string_view AdvantageScalingName(AdvantageScaling scaling) {
  return scaling == AdvantageScaling::kGroupStd ? "group-std" : "batch-std";
}

AdvantageScaling AdvantageScalingFromName(std::string_view name) {
  if (name == "group-std") return AdvantageScaling::kGroupStd;
  if (name == "batch-std") return AdvantageScaling::kBatchStd;
  throw std::invalid_argument("unknown advantage scaling '" +
                              std::string(name) +
                              "' (expected group-std or batch-std)");
}

void TrainConfig::Validate() const {
  env.Validate();
  reward.Validate();
  if (iterations < 1) throw std::invalid_argument("iterations must be positive");
  if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  if (questions_per_iteration < 1) {
    throw std::invalid_argument("questions_per_iteration must be positive");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (eval_every < 1) throw std::invalid_argument("eval_every must be positive");
  if (eval_episodes < 1) {
    throw std::invalid_argument("eval_episodes must be positive");
  }
  if (workers < 1) throw std::invalid_argument("workers must be positive");
}

std::uint64_t EvalSeed(std::uint64_t train_seed) {
  return StreamSeed(train_seed, {kEvalStream});
}

std::vector<SimEpisode> EvaluateEpisodes(const SimPolicy& policy,
                                         const EnvSpec& env, int n_episodes,
                                         std::uint64_t seed, int workers) {
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  std::vector<SimEpisode> episodes(n_episodes);
  const std::uint64_t salt = EnvSalt(env);
  const ActionSampler sampler(policy.params());
  ParallelFor(episodes.size(), workers, [&](std::size_t k) {
    Rng rng(StreamSeed(seed ^ salt, {k}));
    episodes[k] = RunEpisode(env, policy, sampler, rng, EmOnly{});
  });
  return episodes;
}

std::vector<PredictionRecord> ToRecords(std::span<const SimEpisode> episodes) {
  std::vector<PredictionRecord> records;
  records.reserve(episodes.size());
  for (size_t k = 0; k < episodes.size(); ++k) {
    records.push_back({"eval-" + std::to_string(k),
                       episodes[k].outcome.confidence_bin / 10.0,
                       episodes[k].outcome.correct, std::nullopt});
  }
  return records;
}

std::vector<PredictionRecord> EvaluatePolicy(const SimPolicy& policy,
                                             const EnvSpec& env,
                                             int n_episodes,
                                             std::uint64_t seed, int workers) {
  return ToRecords(EvaluateEpisodes(policy, env, n_episodes, seed, workers));
}

namespace {

TrainLogRow Checkpoint(const SimPolicy& policy, const TrainConfig& config,
                       int iteration, std::optional<double> train_reward) {
  const auto records = EvaluatePolicy(policy, config.env, config.eval_episodes,
                                      EvalSeed(config.seed), config.workers);
  const CalibrationReport report = BuildReport(records);
  TrainLogRow row;
  row.iteration = iteration;
  row.train_mean_reward = train_reward;
  row.eval_accuracy = report.accuracy;
  row.eval_ece = report.ece;
  row.eval_brier = report.brier;
  row.eval_auroc = report.auroc;
  row.eval_mcip = report.mcip;
  row.mean_confidence = report.mean_confidence;
  return row;
}

}  // namespace

TrainResult Train(const TrainConfig& config) {
  config.Validate();
  TrainResult result{
      SimPolicy::Create(config.env.n_archetypes, config.learning_rate,
                        config.init),
      {}};
  SimPolicy& policy = result.policy;
  result.log.rows.push_back(Checkpoint(policy, config, 0, std::nullopt));

  const std::uint64_t salt = EnvSalt(config.env);
  const int groups = config.questions_per_iteration;
  const int group_size = config.group_size;
  std::vector<SimEpisode> episodes(static_cast<size_t>(groups) * group_size);
  std::vector<EpisodeOutcome> outcomes(episodes.size());
  std::vector<double> rewards(episodes.size());
  std::vector<double> advantages(episodes.size());
  std::vector<int> archetypes(groups);
  double reward_sum = 0.0;
  long reward_count = 0;

  for (int it = 1; it <= config.iterations; ++it) {
    Rng pick(StreamSeed(config.seed ^ salt, {kArchetypeStream,
                                             static_cast<std::uint64_t>(it)}));
    for (int g = 0; g < groups; ++g) {
      archetypes[g] = static_cast<int>(pick.Below(config.env.n_archetypes));
    }
    const ActionSampler sampler(policy.params());
    // One stream per fixed chunk of groups; chunks are the unit of parallel
    // work, so results do not depend on the worker count.
    const size_t chunks = (groups + kGroupsPerStream - 1) / kGroupsPerStream;
    ParallelFor(chunks, config.workers, [&](std::size_t chunk) {
      Rng rng(StreamSeed(config.seed ^ salt, {kRolloutStream,
                                              static_cast<std::uint64_t>(it),
                                              chunk}));
      const int first = static_cast<int>(chunk) * kGroupsPerStream;
      const int last = std::min(groups, first + kGroupsPerStream);
      for (int g = first; g < last; ++g) {
        for (int i = 0; i < group_size; ++i) {
          episodes[g * group_size + i] =
              RunEpisode(config.env, policy, sampler, rng,
                         config.reward.family, archetypes[g]);
        }
      }
    });
    for (size_t k = 0; k < episodes.size(); ++k) {
      rewards[k] = episodes[k].outcome.reward;
      reward_sum += rewards[k];
    }
    reward_count += static_cast<long>(episodes.size());
    if (config.advantage_scaling == AdvantageScaling::kBatchStd) {
      advantages = BatchScaledAdvantages(rewards, group_size);
    } else {
      const std::span<const double> all(rewards);
      for (int g = 0; g < groups; ++g) {
        const std::vector<double> adv =
            GroupAdvantages(all.subspan(static_cast<size_t>(g) * group_size,
                                        group_size));
        std::copy(adv.begin(), adv.end(),
                  advantages.begin() + static_cast<long>(g) * group_size);
      }
    }
    for (size_t k = 0; k < episodes.size(); ++k) {
      outcomes[k] = episodes[k].outcome;
    }
    policy.mutable_params() =
        PolicyGradientStep(policy.params(), outcomes, advantages);

    if (it % config.eval_every == 0 || it == config.iterations) {
      result.log.rows.push_back(
          Checkpoint(policy, config, it, reward_sum / reward_count));
      reward_sum = 0.0;
      reward_count = 0;
    }
  }
  return result;
}

DichotomyResult DichotomyExperiment(const DichotomyConfig& config) {
  DichotomyResult out;
  std::vector<double> evidence_gains;
  out.min_em_mcip = 1.0;

  for (int r = 0; r < config.repetitions; ++r) {
    DichotomyRepetition rep;
    rep.seed = StreamSeed(config.seed, {static_cast<std::uint64_t>(r)});

    auto run = [&](const auto& env_kind, const RewardFamily& family,
                   bool conditioned) {
      TrainConfig tc = config.base;
      tc.env.kind = env_kind;
      tc.reward.family = family;
      tc.init.feedback_conditioned = conditioned;
      tc.seed = rep.seed;
      TrainResult trained = Train(tc);
      const auto records = EvaluatePolicy(trained.policy, tc.env,
                                          tc.eval_episodes, EvalSeed(tc.seed),
                                          tc.workers);
      return std::make_pair(BuildReport(records), std::move(trained.log));
    };

    auto [ver_cond, ver_log] =
        run(config.verification, config.calibrated_reward, true);
    auto [ver_blind, ver_blind_log] =
        run(config.verification, config.calibrated_reward, false);
    auto [ev_cond, ev_log] = run(config.evidence, config.calibrated_reward, true);
    auto [ev_blind, ev_blind_log] =
        run(config.evidence, config.calibrated_reward, false);
    auto [ev_em, ev_em_log] = run(config.evidence, EmOnly{}, true);
    auto [ver_em, ver_em_log] = run(config.verification, EmOnly{}, true);

    rep.verification_auroc_conditioned = ver_cond.auroc;
    rep.verification_auroc_blinded = ver_blind.auroc;
    rep.evidence_auroc_conditioned = ev_cond.auroc;
    rep.evidence_auroc_blinded = ev_blind.auroc;
    rep.evidence_accuracy = ev_cond.accuracy;
    rep.verification_accuracy = ver_cond.accuracy;
    rep.evidence_ece = ev_cond.ece;
    rep.verification_ece = ver_cond.ece;
    rep.evidence_em_mcip = ev_em.mcip;
    rep.verification_em_mcip = ver_em.mcip;

    if (rep.verification_auroc_conditioned && rep.verification_auroc_blinded &&
        *rep.verification_auroc_conditioned > *rep.verification_auroc_blinded) {
      ++out.verification_wins;
    }
    const double ev_gain = rep.evidence_auroc_conditioned.value_or(0.5) -
                           rep.evidence_auroc_blinded.value_or(0.5);
    if (ev_gain != 0.0) ++out.evidence_nonzero;
    if (ev_gain > 0.0) ++out.evidence_positive;
    for (const auto& mcip : {rep.evidence_em_mcip, rep.verification_em_mcip}) {
      out.min_em_mcip = std::min(out.min_em_mcip, mcip.value_or(0.0));
    }
    if (r == 0) {
      out.evidence_log = std::move(ev_log);
      out.verification_log = std::move(ver_log);
    }
    out.repetitions.push_back(rep);
  }
  out.evidence_sign_test_p = SignTestP(out.evidence_positive,
                                       out.evidence_nonzero);
  out.verification_sign_test_p =
      SignTestP(out.verification_wins, config.repetitions);
  return out;
}

}  // namespace car
