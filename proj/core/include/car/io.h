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

// File formats.
//
//   trajectory corpus  JSONL {"id", "transcript", "gold": [..],
//                             "tool_schema": "search"|"code"}
//   scored output      JSONL {"id", "correct", "confidence", "format_valid",
//                             "reward": {"outcome", "calibration",
//                                        "format_penalty", "total"}}
//   predictions        JSONL {"id", "confidence", "correct", "config"?}
//   report             JSON object mirroring CalibrationReport, undefined
//                      metrics as null
//   train log          CSV (one row per checkpoint) and JSON
//   incentive profile  JSON and CSV (p, optimal_q, expected_reward)
//   simulation config  one JSON document
//
// Doubles are written in shortest round-trip form, so reading back yields
// the same bits.

#ifndef CAR_IO_H_
#define CAR_IO_H_

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "car/metrics.h"
#include "car/oracle.h"
#include "car/reward.h"
#include "car/simlab.h"
#include "car/transcript.h"

namespace car {

// Malformed input data (exit code 2 at the CLI).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration (exit code 4 at the CLI).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-empty lines of a stream, in order. Trailing '\r' is stripped.
std::vector<std::string> ReadLines(std::istream& in);

// `line_no` is 1-based and only used in error messages. A missing
// "tool_schema" falls back to `default_tool`.
TrajectoryCase ParseTrajectoryCase(std::string_view line, long line_no,
                                   ToolKind default_tool = ToolKind::kSearch);
std::string TrajectoryCaseJson(const TrajectoryCase& c);

std::string ScoredLineJson(std::string_view id, const ParsedTrajectory& traj,
                           const RewardBreakdown& reward);

PredictionRecord ParsePrediction(std::string_view line, long line_no);
std::string PredictionJson(const PredictionRecord& record);

std::string ReportJson(const CalibrationReport& report);
// Pretty JSON of a report plus extra top-level fields given as raw JSON.
std::string ReportJson(
    const CalibrationReport& report,
    const std::vector<std::pair<std::string, std::string>>& extra);

std::string TrainLogCsv(const TrainLog& log);
std::string TrainLogJson(const TrainLog& log);

std::string IncentiveProfileJson(const IncentiveProfile& profile,
                                 double reward_margin);
std::string IncentiveProfileCsv(const IncentiveProfile& profile);

// Reward spec JSON: {"family": name, "lambda"|"beta1"|"beta2"|"alpha": x,
// "format_penalty": x}.
std::string RewardSpecJson(const RewardSpec& spec);

// Simulation config. Unknown or ill-typed fields throw ConfigError naming the
// field. Accepted layout:
//   {"env": {"kind": "evidence", "rho", "p_direct", "p_good", "p_bad",
//            "n_archetypes", "seed"}
//        | {"kind": "verification", "p0", "gamma", "budget", ...},
//    "reward": {"family", "lambda", "beta1", "beta2", "alpha",
//               "format_penalty"},
//    "iterations", "group_size", "questions_per_iteration",
//    "learning_rate", "advantage_scaling" ("batch-std"|"group-std"),
//    "eval_every", "eval_episodes", "seed", "workers",
//    "init": {"overconfident_mass" (number|null), "feedback_conditioned",
//             "direct_logit", "tool_logit", "confidence_rate_scale",
//             "tool_rate_scale"}}
// Missing fields keep their defaults. `seed_present` reports whether the
// document set "seed".
TrainConfig ParseTrainConfig(std::string_view json,
                             bool* seed_present = nullptr);
std::string TrainConfigJson(const TrainConfig& config);

std::string DichotomyJson(const DichotomyResult& result);

}  // namespace car

#endif  // CAR_IO_H_
