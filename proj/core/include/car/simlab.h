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

// Synthetic tool-use environments and a GRPO training loop over a tabular
// policy.
//
// Each episode the policy picks {answer directly, use tool} for the sampled
// question archetype, the environment resolves correctness, and the policy
// then reports a confidence bin from a head indexed by (archetype, feedback
// state).
//
// Evidence environments only ever report that a document arrived; whether it
// was faithful stays hidden. Verification environments run a candidate
// through a one-sided check: wrong candidates are flagged with probability
// gamma and may be resampled while budget remains, correct ones always pass.
//
// All randomness flows from per-episode streams split off the master seed,
// so runs are reproducible and independent of rollout parallelism, and two
// policies evaluated under one seed face the same environment draws.

#ifndef CAR_SIMLAB_H_
#define CAR_SIMLAB_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "car/grpo.h"
#include "car/metrics.h"
#include "car/reward.h"

namespace car {

struct EvidenceEnv {
  double rho = 0.7;       // probability the retrieved document is faithful
  double p_direct = 0.4;  // accuracy without the tool
  double p_good = 0.9;    // accuracy given a faithful document
  double p_bad = 0.2;     // accuracy given a misleading document
  bool operator==(const EvidenceEnv&) const = default;
};

struct VerificationEnv {
  double p0 = 0.465;    // per-attempt candidate accuracy
  double gamma = 0.9;   // probability a wrong candidate is caught
  int budget = 1;       // resamples allowed after a caught failure
  bool operator==(const VerificationEnv&) const = default;
};

struct EnvSpec {
  std::variant<EvidenceEnv, VerificationEnv> kind = EvidenceEnv{};
  int n_archetypes = 8;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the bad field.
  void Validate() const;
  bool operator==(const EnvSpec&) const = default;
};

enum class FeedbackState : int {
  kNone = 0,
  kToolUsed = 1,
  kPassObserved = 2,
  kFailThenPass = 3,
  kExhausted = 4,
};
inline constexpr int kFeedbackStates = 5;
inline constexpr int kConfidenceBins = 11;

std::string_view FeedbackStateName(FeedbackState state);

enum class ToolAction : int { kDirect = 0, kTool = 1 };

// Closed-form accuracy under a fixed tool-use probability.
double ExpectedAccuracy(const EnvSpec& env, double tool_probability);

struct PolicyInit {
  double direct_logit = 0.0;
  double tool_logit = 0.0;
  // When set, confidence heads start with bins 0.9 and 1.0 holding this much
  // of the mass (logits linear in the bin). Otherwise heads start uniform.
  std::optional<double> overconfident_mass = 0.8;
  // False shares one confidence head per archetype across feedback states.
  bool feedback_conditioned = true;
  double confidence_rate_scale = 0.08;
  double tool_rate_scale = 1.0;
};

// Logits b * s over the bins with s chosen so bins 9 and 10 hold `mass`.
std::vector<double> OverconfidentLogits(double mass);

class SimPolicy {
 public:
  static SimPolicy Create(int n_archetypes, double learning_rate,
                          const PolicyInit& init = {});

  DecisionPoint ToolPoint(int archetype) const;
  DecisionPoint ConfidencePoint(int archetype, FeedbackState state) const;

  const PolicyParams& params() const { return params_; }
  PolicyParams& mutable_params() { return params_; }
  int n_archetypes() const { return static_cast<int>(tool_points_.size()); }
  bool feedback_conditioned() const { return feedback_conditioned_; }

  double ToolProbability(int archetype) const;
  // Expected confidence of the head at (archetype, state).
  double MeanConfidence(int archetype, FeedbackState state) const;

 private:
  PolicyParams params_;
  bool feedback_conditioned_ = true;
  std::vector<DecisionPoint> tool_points_;
  std::vector<std::array<DecisionPoint, kFeedbackStates>> confidence_points_;
};

struct SimEpisode {
  EpisodeOutcome outcome;
  FeedbackState feedback = FeedbackState::kNone;
  int tool_calls = 0;
};

// One episode. The archetype is drawn from `rng` unless given. Reward is
// filled from `reward` (simulated transcripts are always well formed).
SimEpisode RunEpisode(const EnvSpec& env, const SimPolicy& policy, Rng& rng,
                      const RewardFamily& reward,
                      std::optional<int> archetype = std::nullopt);
// Same draws, with the policy's probabilities precomputed in `sampler`.
SimEpisode RunEpisode(const EnvSpec& env, const SimPolicy& policy,
                      const ActionSampler& sampler, Rng& rng,
                      const RewardFamily& reward,
                      std::optional<int> archetype = std::nullopt);

// How rollout rewards become advantages during training.
enum class AdvantageScaling {
  kGroupStd,  // GroupAdvantages per group
  kBatchStd,  // BatchScaledAdvantages over the iteration's groups
};
std::string_view AdvantageScalingName(AdvantageScaling scaling);
AdvantageScaling AdvantageScalingFromName(std::string_view name);

struct TrainConfig {
  EnvSpec env;
  RewardSpec reward;
  int iterations = 2000;
  int group_size = 8;
  // Archetypes sampled per iteration; each contributes one group.
  int questions_per_iteration = 512;
  double learning_rate = 0.05;
  AdvantageScaling advantage_scaling = AdvantageScaling::kBatchStd;
  int eval_every = 200;
  int eval_episodes = 2000;
  std::uint64_t seed = 0;
  PolicyInit init;
  int workers = 1;

  void Validate() const;
};

struct TrainLogRow {
  int iteration = 0;
  std::optional<double> train_mean_reward;  // absent for the initial row
  double eval_accuracy = 0.0;
  double eval_ece = 0.0;
  double eval_brier = 0.0;
  std::optional<double> eval_auroc;
  std::optional<double> eval_mcip;
  double mean_confidence = 0.0;

  bool operator==(const TrainLogRow&) const = default;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  bool operator==(const TrainLog&) const = default;
};

struct TrainResult {
  SimPolicy policy;
  TrainLog log;
};

TrainResult Train(const TrainConfig& config);

// Evaluation stream of a training seed; every checkpoint uses the same one.
std::uint64_t EvalSeed(std::uint64_t train_seed);

std::vector<SimEpisode> EvaluateEpisodes(const SimPolicy& policy,
                                         const EnvSpec& env, int n_episodes,
                                         std::uint64_t seed, int workers = 1);

// Episode k becomes record "eval-k" with confidence bin/10.
std::vector<PredictionRecord> EvaluatePolicy(const SimPolicy& policy,
                                             const EnvSpec& env,
                                             int n_episodes,
                                             std::uint64_t seed,
                                             int workers = 1);

std::vector<PredictionRecord> ToRecords(std::span<const SimEpisode> episodes);

struct DichotomyConfig {
  std::uint64_t seed = 0;
  int repetitions = 10;
  EvidenceEnv evidence;
  VerificationEnv verification;
  TrainConfig base;  // env.kind and reward are overridden per arm
  Mscr calibrated_reward;
};

struct DichotomyRepetition {
  std::uint64_t seed = 0;
  std::optional<double> verification_auroc_conditioned;
  std::optional<double> verification_auroc_blinded;
  std::optional<double> evidence_auroc_conditioned;
  std::optional<double> evidence_auroc_blinded;
  double evidence_accuracy = 0.0;
  double verification_accuracy = 0.0;
  double evidence_ece = 0.0;
  double verification_ece = 0.0;
  std::optional<double> evidence_em_mcip;
  std::optional<double> verification_em_mcip;
};

struct DichotomyResult {
  std::vector<DichotomyRepetition> repetitions;
  int verification_wins = 0;    // conditioned AUROC strictly above blinded
  int evidence_positive = 0;    // conditioned AUROC strictly above blinded
  int evidence_nonzero = 0;     // pairs with a nonzero AUROC difference
  double evidence_sign_test_p = 1.0;
  double verification_sign_test_p = 1.0;
  double min_em_mcip = 0.0;
  // The MSCR training traces of the first repetition.
  TrainLog evidence_log;
  TrainLog verification_log;
};

DichotomyResult DichotomyExperiment(const DichotomyConfig& config);

}  // namespace car

#endif  // CAR_SIMLAB_H_
