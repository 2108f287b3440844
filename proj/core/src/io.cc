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

#include "car/io.h"

#include <charconv>
#include <cmath>
#include <istream>
#include <set>

#include "json.hpp"

namespace car {
namespace {

using Json = nlohmann::ordered_json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string LinePrefix(long line_no) {
  return "line " + std::to_string(line_no) + ": ";
}

Json ParseObjectLine(std::string_view line, long line_no) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw InputError(LinePrefix(line_no) + "invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) {
    throw InputError(LinePrefix(line_no) + "expected a JSON object");
  }
  return j;
}

const Json& RequireField(const Json& j, const char* key, long line_no) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw InputError(LinePrefix(line_no) + "missing field \"" + key + "\"");
  }
  return *it;
}

std::string RequireString(const Json& j, const char* key, long line_no) {
  const Json& v = RequireField(j, key, line_no);
  if (!v.is_string()) {
    throw InputError(LinePrefix(line_no) + "field \"" + key +
                     "\" must be a string");
  }
  return v.get<std::string>();
}

Json OptionalNumber(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string FormatOptional(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : std::string();
}

Json BinsJson(const std::vector<BinStat>& bins) {
  Json out = Json::array();
  for (const BinStat& b : bins) {
    out.push_back({{"lower", b.lower},
                   {"upper", b.upper},
                   {"count", b.count},
                   {"mean_confidence", b.mean_confidence},
                   {"empirical_accuracy", b.empirical_accuracy}});
  }
  return out;
}

Json ReportToJson(const CalibrationReport& report) {
  return Json{{"n", report.n},
              {"accuracy", report.accuracy},
              {"mean_confidence", report.mean_confidence},
              {"ece", report.ece},
              {"brier", report.brier},
              {"auroc", OptionalNumber(report.auroc)},
              {"mcip", OptionalNumber(report.mcip)},
              {"bins", BinsJson(report.bins)}};
}

Json RewardSpecToJson(const RewardSpec& spec) {
  Json j{{"family", std::string(FamilyName(spec.family))}};
  std::visit(Overloaded{
                 [](const EmOnly&) {},
                 [&](const WeightedBrier& f) { j["lambda"] = f.lambda; },
                 [&](const Mscr& f) {
                   j["beta1"] = f.beta1;
                   j["beta2"] = f.beta2;
                 },
                 [&](const SearchPenalty& f) { j["alpha"] = f.alpha; },
             },
             spec.family);
  j["format_penalty"] = spec.format_penalty;
  return j;
}

// Typed field access for config documents; every failure names the field by
// its dotted path.
class ConfigReader {
 public:
  ConfigReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(Name("") + " must be an object");
  }

  void AllowOnly(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j_.items()) {
      if (!allowed.count(key)) {
        throw ConfigError("unknown config field '" + Name(key) + "'");
      }
    }
  }

  bool Has(const char* key) const { return j_.contains(key); }

  void Number(const char* key, double& out) const {
    if (!Has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number()) {
      throw ConfigError("config field '" + Name(key) + "' must be a number");
    }
    out = v.get<double>();
    if (!std::isfinite(out)) {
      throw ConfigError("config field '" + Name(key) + "' must be finite");
    }
  }

  template <class Int>
  void Integer(const char* key, Int& out) const {
    if (!Has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) {
      throw ConfigError("config field '" + Name(key) + "' must be an integer");
    }
    out = v.get<Int>();
  }

  void Bool(const char* key, bool& out) const {
    if (!Has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) {
      throw ConfigError("config field '" + Name(key) + "' must be a boolean");
    }
    out = v.get<bool>();
  }

  std::string String(const char* key) const {
    const Json& v = j_.at(key);
    if (!v.is_string()) {
      throw ConfigError("config field '" + Name(key) + "' must be a string");
    }
    return v.get<std::string>();
  }

  ConfigReader Child(const char* key) const {
    return ConfigReader(j_.at(key), Name(key));
  }

  const Json& raw(const char* key) const { return j_.at(key); }

  std::string Name(const std::string& key) const {
    if (path_.empty()) return key;
    if (key.empty()) return path_;
    return path_ + "." + key;
  }

 private:
  const Json& j_;
  std::string path_;
};

RewardSpec ParseRewardSpec(const ConfigReader& r) {
  r.AllowOnly({"family", "lambda", "beta1", "beta2", "alpha",
               "format_penalty"});
  RewardSpec spec;
  if (r.Has("family")) {
    try {
      spec.family = FamilyFromName(r.String("family"));
    } catch (const std::invalid_argument& e) {
      if (dynamic_cast<const ConfigError*>(&e)) throw;
      throw ConfigError("config field '" + r.Name("family") + "': " + e.what());
    }
  }
  std::visit(Overloaded{
                 [](EmOnly&) {},
                 [&](WeightedBrier& f) { r.Number("lambda", f.lambda); },
                 [&](Mscr& f) {
                   r.Number("beta1", f.beta1);
                   r.Number("beta2", f.beta2);
                 },
                 [&](SearchPenalty& f) { r.Number("alpha", f.alpha); },
             },
             spec.family);
  r.Number("format_penalty", spec.format_penalty);
  try {
    spec.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config field '" + r.Name("") + "': " + e.what());
  }
  return spec;
}

EnvSpec ParseEnvSpec(const ConfigReader& r) {
  EnvSpec env;
  std::string kind = "evidence";
  if (r.Has("kind")) kind = r.String("kind");
  if (kind == "evidence") {
    r.AllowOnly({"kind", "rho", "p_direct", "p_good", "p_bad", "n_archetypes",
                 "seed"});
    EvidenceEnv e;
    r.Number("rho", e.rho);
    r.Number("p_direct", e.p_direct);
    r.Number("p_good", e.p_good);
    r.Number("p_bad", e.p_bad);
    env.kind = e;
  } else if (kind == "verification") {
    r.AllowOnly({"kind", "p0", "gamma", "budget", "n_archetypes", "seed"});
    VerificationEnv v;
    r.Number("p0", v.p0);
    r.Number("gamma", v.gamma);
    r.Integer("budget", v.budget);
    env.kind = v;
  } else {
    throw ConfigError("config field '" + r.Name("kind") +
                      "' must be \"evidence\" or \"verification\"");
  }
  r.Integer("n_archetypes", env.n_archetypes);
  r.Integer("seed", env.seed);
  try {
    env.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return env;
}

PolicyInit ParsePolicyInit(const ConfigReader& r) {
  r.AllowOnly({"overconfident_mass", "feedback_conditioned", "direct_logit",
               "tool_logit", "confidence_rate_scale", "tool_rate_scale"});
  PolicyInit init;
  if (r.Has("overconfident_mass")) {
    if (r.raw("overconfident_mass").is_null()) {
      init.overconfident_mass.reset();
    } else {
      double mass = 0.0;
      r.Number("overconfident_mass", mass);
      if (!(mass > 2.0 / kConfidenceBins && mass < 1.0)) {
        throw ConfigError("config field '" + r.Name("overconfident_mass") +
                          "' must lie in (2/11, 1)");
      }
      init.overconfident_mass = mass;
    }
  }
  r.Bool("feedback_conditioned", init.feedback_conditioned);
  r.Number("direct_logit", init.direct_logit);
  r.Number("tool_logit", init.tool_logit);
  r.Number("confidence_rate_scale", init.confidence_rate_scale);
  r.Number("tool_rate_scale", init.tool_rate_scale);
  return init;
}

Json TrainLogRowJson(const TrainLogRow& row) {
  return Json{{"iteration", row.iteration},
              {"train_mean_reward", OptionalNumber(row.train_mean_reward)},
              {"eval_accuracy", row.eval_accuracy},
              {"eval_ece", row.eval_ece},
              {"eval_brier", row.eval_brier},
              {"eval_auroc", OptionalNumber(row.eval_auroc)},
              {"eval_mcip", OptionalNumber(row.eval_mcip)},
              {"mean_confidence", row.mean_confidence}};
}

Json TrainLogToJson(const TrainLog& log) {
  Json rows = Json::array();
  for (const TrainLogRow& row : log.rows) rows.push_back(TrainLogRowJson(row));
  return rows;
}

}  // namespace

std::vector<std::string> ReadLines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

TrajectoryCase ParseTrajectoryCase(std::string_view line, long line_no,
                                   ToolKind default_tool) {
  const Json j = ParseObjectLine(line, line_no);
  TrajectoryCase c;
  c.id = RequireString(j, "id", line_no);
  c.transcript = RequireString(j, "transcript", line_no);
  const Json& gold = RequireField(j, "gold", line_no);
  if (!gold.is_array() || gold.empty()) {
    throw InputError(LinePrefix(line_no) +
                     "field \"gold\" must be a nonempty array of strings");
  }
  for (const Json& g : gold) {
    if (!g.is_string()) {
      throw InputError(LinePrefix(line_no) +
                       "field \"gold\" must contain only strings");
    }
    c.gold.push_back(g.get<std::string>());
  }
  c.tool = default_tool;
  if (j.contains("tool_schema")) {
    const std::string name = RequireString(j, "tool_schema", line_no);
    try {
      c.tool = ParseToolKind(name);
    } catch (const std::invalid_argument& e) {
      throw InputError(LinePrefix(line_no) + e.what());
    }
  }
  return c;
}

std::string TrajectoryCaseJson(const TrajectoryCase& c) {
  return Json{{"id", c.id},
              {"transcript", c.transcript},
              {"gold", c.gold},
              {"tool_schema", std::string(ToolKindName(c.tool))}}
      .dump();
}

std::string ScoredLineJson(std::string_view id, const ParsedTrajectory& traj,
                           const RewardBreakdown& reward) {
  return Json{{"id", std::string(id)},
              {"correct", reward.correct},
              {"confidence", OptionalNumber(traj.confidence)},
              {"format_valid", traj.format_valid},
              {"reward",
               {{"outcome", reward.outcome_term},
                {"calibration", reward.calibration_term},
                {"format_penalty", reward.format_penalty_applied},
                {"total", reward.total}}}}
      .dump();
}

PredictionRecord ParsePrediction(std::string_view line, long line_no) {
  const Json j = ParseObjectLine(line, line_no);
  PredictionRecord r;
  r.id = RequireString(j, "id", line_no);
  const Json& conf = RequireField(j, "confidence", line_no);
  if (!conf.is_number()) {
    throw InputError(LinePrefix(line_no) +
                     "field \"confidence\" must be a number");
  }
  r.confidence = conf.get<double>();
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
    throw InputError(LinePrefix(line_no) + "confidence outside [0, 1]");
  }
  const Json& correct = RequireField(j, "correct", line_no);
  if (!correct.is_boolean()) {
    throw InputError(LinePrefix(line_no) +
                     "field \"correct\" must be a boolean");
  }
  r.correct = correct.get<bool>();
  if (j.contains("config") && !j.at("config").is_null()) {
    r.config_label = RequireString(j, "config", line_no);
  }
  return r;
}

std::string PredictionJson(const PredictionRecord& record) {
  Json j{{"id", record.id},
         {"confidence", record.confidence},
         {"correct", record.correct}};
  if (record.config_label) j["config"] = *record.config_label;
  return j.dump();
}

std::string ReportJson(const CalibrationReport& report) {
  return ReportToJson(report).dump(2);
}

std::string ReportJson(
    const CalibrationReport& report,
    const std::vector<std::pair<std::string, std::string>>& extra) {
  Json j = ReportToJson(report);
  for (const auto& [key, raw] : extra) j[key] = Json::parse(raw);
  return j.dump(2);
}

std::string TrainLogCsv(const TrainLog& log) {
  std::string out =
      "iteration,train_mean_reward,eval_accuracy,eval_ece,eval_brier,"
      "eval_auroc,eval_mcip,mean_confidence\n";
  for (const TrainLogRow& row : log.rows) {
    out += std::to_string(row.iteration) + "," +
           FormatOptional(row.train_mean_reward) + "," +
           FormatDouble(row.eval_accuracy) + "," + FormatDouble(row.eval_ece) +
           "," + FormatDouble(row.eval_brier) + "," +
           FormatOptional(row.eval_auroc) + "," +
           FormatOptional(row.eval_mcip) + "," +
           FormatDouble(row.mean_confidence) + "\n";
  }
  return out;
}

std::string TrainLogJson(const TrainLog& log) {
  return TrainLogToJson(log).dump(2);
}

std::string IncentiveProfileJson(const IncentiveProfile& profile,
                                 double reward_margin) {
  Json points = Json::array();
  for (const IncentivePoint& pt : profile.points) {
    points.push_back({{"p", pt.p},
                      {"optimal_q", pt.optimal_q},
                      {"expected_reward", pt.expected_reward}});
  }
  return Json{{"spec", RewardSpecToJson(profile.spec)},
              {"proper", profile.proper},
              {"flat", profile.flat},
              {"max_truthfulness_gap", profile.max_truthfulness_gap},
              {"gap_argmax_p", profile.gap_argmax_p},
              {"tolerance", profile.tolerance},
              {"step", profile.step},
              {"reward_margin", reward_margin},
              {"points", points}}
      .dump(2);
}

std::string IncentiveProfileCsv(const IncentiveProfile& profile) {
  std::string out = "p,optimal_q,expected_reward\n";
  for (const IncentivePoint& pt : profile.points) {
    out += FormatDouble(pt.p) + "," + FormatDouble(pt.optimal_q) + "," +
           FormatDouble(pt.expected_reward) + "\n";
  }
  return out;
}

std::string RewardSpecJson(const RewardSpec& spec) {
  return RewardSpecToJson(spec).dump();
}

TrainConfig ParseTrainConfig(std::string_view json, bool* seed_present) {
  Json j;
  try {
    j = Json::parse(json);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const ConfigReader r(j, "");
  r.AllowOnly({"env", "reward", "iterations", "group_size",
               "questions_per_iteration", "learning_rate",
               "advantage_scaling", "eval_every", "eval_episodes", "seed",
               "workers", "init"});
  TrainConfig config;
  if (r.Has("env")) config.env = ParseEnvSpec(r.Child("env"));
  if (r.Has("reward")) config.reward = ParseRewardSpec(r.Child("reward"));
  if (r.Has("init")) config.init = ParsePolicyInit(r.Child("init"));
  r.Integer("iterations", config.iterations);
  r.Integer("group_size", config.group_size);
  r.Integer("questions_per_iteration", config.questions_per_iteration);
  r.Number("learning_rate", config.learning_rate);
  if (r.Has("advantage_scaling")) {
    try {
      config.advantage_scaling =
          AdvantageScalingFromName(r.String("advantage_scaling"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config field 'advantage_scaling': " +
                        std::string(e.what()));
    }
  }
  r.Integer("eval_every", config.eval_every);
  r.Integer("eval_episodes", config.eval_episodes);
  r.Integer("seed", config.seed);
  r.Integer("workers", config.workers);
  if (seed_present) *seed_present = r.Has("seed");
  try {
    config.Validate();
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(e.what());
  }
  return config;
}

std::string TrainConfigJson(const TrainConfig& config) {
  Json env;
  std::visit(Overloaded{
                 [&](const EvidenceEnv& e) {
                   env = Json{{"kind", "evidence"},
                              {"rho", e.rho},
                              {"p_direct", e.p_direct},
                              {"p_good", e.p_good},
                              {"p_bad", e.p_bad}};
                 },
                 [&](const VerificationEnv& v) {
                   env = Json{{"kind", "verification"},
                              {"p0", v.p0},
                              {"gamma", v.gamma},
                              {"budget", v.budget}};
                 },
             },
             config.env.kind);
  env["n_archetypes"] = config.env.n_archetypes;
  env["seed"] = config.env.seed;
  const PolicyInit& init = config.init;
  return Json{{"env", env},
              {"reward", RewardSpecToJson(config.reward)},
              {"iterations", config.iterations},
              {"group_size", config.group_size},
              {"questions_per_iteration", config.questions_per_iteration},
              {"learning_rate", config.learning_rate},
              {"advantage_scaling",
               std::string(AdvantageScalingName(config.advantage_scaling))},
              {"eval_every", config.eval_every},
              {"eval_episodes", config.eval_episodes},
              {"seed", config.seed},
              {"workers", config.workers},
              {"init",
               {{"overconfident_mass", OptionalNumber(init.overconfident_mass)},
                {"feedback_conditioned", init.feedback_conditioned},
                {"direct_logit", init.direct_logit},
                {"tool_logit", init.tool_logit},
                {"confidence_rate_scale", init.confidence_rate_scale},
                {"tool_rate_scale", init.tool_rate_scale}}}}
      .dump(2);
}

std::string DichotomyJson(const DichotomyResult& result) {
  Json reps = Json::array();
  for (const DichotomyRepetition& r : result.repetitions) {
    reps.push_back(
        {{"seed", r.seed},
         {"verification_auroc_conditioned",
          OptionalNumber(r.verification_auroc_conditioned)},
         {"verification_auroc_blinded",
          OptionalNumber(r.verification_auroc_blinded)},
         {"evidence_auroc_conditioned",
          OptionalNumber(r.evidence_auroc_conditioned)},
         {"evidence_auroc_blinded", OptionalNumber(r.evidence_auroc_blinded)},
         {"evidence_accuracy", r.evidence_accuracy},
         {"verification_accuracy", r.verification_accuracy},
         {"evidence_ece", r.evidence_ece},
         {"verification_ece", r.verification_ece},
         {"evidence_em_mcip", OptionalNumber(r.evidence_em_mcip)},
         {"verification_em_mcip", OptionalNumber(r.verification_em_mcip)}});
  }
  return Json{{"repetitions", reps},
              {"summary",
               {{"verification_conditioned_wins", result.verification_wins},
                {"verification_sign_test_p", result.verification_sign_test_p},
                {"evidence_positive_gains", result.evidence_positive},
                {"evidence_nonzero_pairs", result.evidence_nonzero},
                {"evidence_sign_test_p", result.evidence_sign_test_p},
                {"min_em_mcip", result.min_em_mcip}}},
              {"evidence_log", TrainLogToJson(result.evidence_log)},
              {"verification_log", TrainLogToJson(result.verification_log)}}
      .dump(2);
}

}  // namespace car
