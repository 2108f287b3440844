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

#include "car/commands.h"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "car/io.h"
#include "car/manifest.h"
#include "car/metrics.h"
#include "car/oracle.h"
#include "car/parallel.h"
#include "car/reward.h"
#include "car/simlab.h"
#include "car/transcript.h"
#include "json.hpp"

namespace car::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Reward flags shared by `score` and `oracle`.
struct RewardFlags {
  std::string reward = "mscr";
  double lambda = 1.0 / 3.0;
  double beta1 = 0.5;
  double beta2 = 0.5;
  double alpha = 0.1;
  double format_penalty = 0.5;

  void Register(CLI::App& app) {
    app.add_option("--reward", reward,
                   "Reward family: em|weighted-brier|mscr|search-penalty")
        ->capture_default_str();
    app.add_option("--lambda", lambda, "Weighted-Brier coefficient")
        ->capture_default_str();
    app.add_option("--beta1", beta1, "MSCR correct-branch magnitude")
        ->capture_default_str();
    app.add_option("--beta2", beta2, "MSCR incorrect-branch magnitude")
        ->capture_default_str();
    app.add_option("--alpha", alpha, "Search penalty per tool call")
        ->capture_default_str();
    app.add_option("--format-penalty", format_penalty,
                   "Penalty for format violations")
        ->capture_default_str();
  }

  RewardSpec Resolve() const {
    RewardSpec spec;
    try {
      spec.family = FamilyFromName(reward);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--reward: ") + e.what());
    }
    if (auto* f = std::get_if<WeightedBrier>(&spec.family)) f->lambda = lambda;
    if (auto* f = std::get_if<Mscr>(&spec.family)) {
      f->beta1 = beta1;
      f->beta2 = beta2;
    }
    if (auto* f = std::get_if<SearchPenalty>(&spec.family)) f->alpha = alpha;
    spec.format_penalty = format_penalty;
    try {
      spec.Validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid hyperparameter --") + e.what());
    }
    return spec;
  }
};

void Emit(const std::string& out_path, const std::string& data,
          std::ostream& out) {
  if (out_path.empty()) {
    out << data;
  } else {
    WriteFileAtomic(out_path, data);
  }
}

void EmitManifest(const std::string& out_path, RunManifest manifest) {
  if (out_path.empty()) return;
  manifest.outputs.push_back(out_path);
  WriteFileAtomic(out_path + ".manifest.json", manifest.ToJson());
}

std::vector<std::string> ReadInputLines(const std::string& path) {
  std::istringstream in(ReadFile(path));
  return ReadLines(in);
}

// --- score -----------------------------------------------------------------

struct ScoreArgs {
  std::string input;
  std::string tool_schema = "search";
  std::string out_path;
  int workers = 1;
  RewardFlags reward;
};

int RunScore(const ScoreArgs& args, std::ostream& out, std::ostream& err) {
  const RewardSpec spec = args.reward.Resolve();
  ToolKind default_tool;
  try {
    default_tool = ParseToolKind(args.tool_schema);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("--tool-schema: ") + e.what());
  }
  const std::vector<std::string> lines = ReadInputLines(args.input);
  if (lines.empty()) throw InputError("no cases in '" + args.input + "'");

  std::vector<TrajectoryCase> cases(lines.size());
  std::vector<std::string> scored(lines.size());
  std::vector<double> totals(lines.size());
  std::vector<char> valid(lines.size());
  ParallelFor(lines.size(), args.workers, [&](std::size_t i) {
    cases[i] = ParseTrajectoryCase(lines[i], static_cast<long>(i) + 1,
                                   default_tool);
    const ParsedTrajectory traj =
        ParseTrajectory(cases[i].transcript, ToolSchema::For(cases[i].tool));
    const RewardBreakdown reward = UnifiedReward(traj, cases[i].gold, spec);
    scored[i] = ScoredLineJson(cases[i].id, traj, reward);
    totals[i] = reward.total;
    valid[i] = traj.format_valid;
  });
  std::set<std::string> seen;
  for (const TrajectoryCase& c : cases) {
    if (!seen.insert(c.id).second) {
      throw InputError("duplicate case id '" + c.id + "'");
    }
  }

  std::string body;
  double total = 0.0;
  long violations = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    body += scored[i];
    body += '\n';
    total += totals[i];
    violations += valid[i] ? 0 : 1;
  }
  const auto n = static_cast<double>(lines.size());
  const Json summary{{"cases", lines.size()},
                     {"mean_total_reward", total / n},
                     {"format_violation_rate", violations / n}};
  Emit(args.out_path, body, out);
  err << "summary: " << summary.dump() << "\n";

  RunManifest manifest;
  manifest.command = "score";
  manifest.config_json = Json{{"reward", Json::parse(RewardSpecJson(spec))},
                              {"tool_schema", args.tool_schema},
                              {"workers", args.workers}}
                             .dump();
  manifest.AddInput(args.input);
  manifest.summary_json = summary.dump();
  EmitManifest(args.out_path, std::move(manifest));
  return kExitOk;
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  std::string input;
  int bins = 10;
  double temperature = 1.0;
  bool temperature_set = false;
  std::string out_path;
  int workers = 1;
};

std::vector<PredictionRecord> ReadPredictions(const std::string& path,
                                              int workers) {
  const std::vector<std::string> lines = ReadInputLines(path);
  if (lines.empty()) throw InputError("no predictions in '" + path + "'");
  std::vector<PredictionRecord> records(lines.size());
  ParallelFor(lines.size(), workers, [&](std::size_t i) {
    records[i] = ParsePrediction(lines[i], static_cast<long>(i) + 1);
  });
  return records;
}

int RunReport(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  if (args.bins < 1) throw ConfigError("--bins must be positive");
  if (args.temperature_set && !(args.temperature > 0.0)) {
    throw ConfigError("--temperature must be positive");
  }
  std::vector<PredictionRecord> records =
      ReadPredictions(args.input, args.workers);

  std::vector<std::pair<std::string, std::string>> extra;
  if (args.temperature_set) {
    const std::optional<double> unscaled = Auroc(records);
    ParallelFor(records.size(), args.workers, [&](std::size_t i) {
      records[i].confidence =
          TemperatureScale(records[i].confidence, args.temperature);
    });
    const CalibrationReport scaled = BuildReport(records, args.bins);
    const bool invariant = scaled.auroc == unscaled;
    if (!invariant) {
      err << "warning: AUROC changed under temperature scaling (ties created "
             "by clamping)\n";
    }
    extra = {{"temperature", Json(args.temperature).dump()},
             {"auroc_unscaled",
              unscaled ? Json(*unscaled).dump() : std::string("null")},
             {"auroc_invariant", invariant ? "true" : "false"}};
    Emit(args.out_path, ReportJson(scaled, extra) + "\n", out);
  } else {
    Emit(args.out_path, ReportJson(BuildReport(records, args.bins)) + "\n",
         out);
  }

  RunManifest manifest;
  manifest.command = "report";
  Json config{{"bins", args.bins}, {"workers", args.workers}};
  config["temperature"] =
      args.temperature_set ? Json(args.temperature) : Json(nullptr);
  manifest.config_json = config.dump();
  manifest.AddInput(args.input);
  EmitManifest(args.out_path, std::move(manifest));
  return kExitOk;
}

// --- compare ---------------------------------------------------------------

struct CompareArgs {
  std::vector<std::string> inputs;
  std::string out_path;
};

std::string RunLabel(const std::string& path,
                     const std::vector<PredictionRecord>& records) {
  std::optional<std::string> label;
  for (const PredictionRecord& r : records) {
    if (!r.config_label) return fs::path(path).stem().string();
    if (label && *label != *r.config_label) {
      return fs::path(path).stem().string();
    }
    label = r.config_label;
  }
  return label.value_or(fs::path(path).stem().string());
}

int RunCompare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  if (args.inputs.size() < 2) {
    throw ConfigError("compare needs at least two predictions files");
  }
  std::map<std::string, std::vector<PredictionRecord>> runs;
  std::vector<std::string> labels;
  for (const std::string& path : args.inputs) {
    std::vector<PredictionRecord> records = ReadPredictions(path, 1);
    std::string label = RunLabel(path, records);
    if (runs.count(label)) label = path;
    if (runs.count(label)) {
      throw ConfigError("predictions file given twice: '" + path + "'");
    }
    labels.push_back(label);
    runs.emplace(label, std::move(records));
  }
  const std::set<std::string> wrong = IntersectWrong(runs);

  // Confidence per id on the intersection, in sorted id order.
  std::map<std::string, std::vector<double>> aligned;
  Json mcip = Json::object();
  for (const std::string& label : labels) {
    std::map<std::string, double> by_id;
    for (const PredictionRecord& r : runs.at(label)) by_id[r.id] = r.confidence;
    std::vector<double>& conf = aligned[label];
    std::vector<PredictionRecord> subset;
    for (const std::string& id : wrong) {
      conf.push_back(by_id.at(id));
      subset.push_back({id, by_id.at(id), false, label});
    }
    const std::optional<double> value = Mcip(subset);
    mcip[label] = value ? Json(*value) : Json(nullptr);
  }

  Json tests = Json::array();
  Json notice = nullptr;
  if (wrong.size() < 2) {
    notice = "intersection has " + std::to_string(wrong.size()) +
             " ids; paired t-tests need at least 2 and were skipped";
    err << "notice: " << notice.get<std::string>() << "\n";
  } else {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        const TTestResult t =
            PairedTTest(aligned.at(labels[i]), aligned.at(labels[j]));
        Json entry{{"a", labels[i]},
                   {"b", labels[j]},
                   {"t_statistic", std::isfinite(t.t_statistic)
                                       ? Json(t.t_statistic)
                                       : Json(t.t_statistic > 0 ? "inf"
                                                                : "-inf")},
                   {"degrees_of_freedom", t.degrees_of_freedom},
                   {"p_value", t.p_value},
                   {"degenerate", t.degenerate}};
        tests.push_back(entry);
      }
    }
  }
  const Json result{{"configs", labels},
                    {"intersection_size", wrong.size()},
                    {"intersection_ids", wrong},
                    {"mcip_on_intersection", mcip},
                    {"t_tests", tests},
                    {"notice", notice}};
  Emit(args.out_path, result.dump(2) + "\n", out);

  RunManifest manifest;
  manifest.command = "compare";
  manifest.config_json = Json{{"labels", labels}}.dump();
  for (const std::string& path : args.inputs) manifest.AddInput(path);
  EmitManifest(args.out_path, std::move(manifest));
  return kExitOk;
}

// --- oracle ----------------------------------------------------------------

struct OracleArgs {
  RewardFlags reward;
  double step = 0.001;
  double p_grid = 0.05;
  double tolerance = 0.005;
  std::string out_path;
  std::string csv_path;
};

int RunOracle(const OracleArgs& args, std::ostream& out, std::ostream& err) {
  const RewardSpec spec = args.reward.Resolve();
  if (!(args.step > 0.0 && args.step <= 0.1)) {
    throw ConfigError("--step must lie in (0, 0.1]");
  }
  if (!(args.p_grid > 0.0 && args.p_grid <= 1.0)) {
    throw ConfigError("--p-grid must lie in (0, 1]");
  }
  if (!(args.tolerance >= 0.0)) {
    throw ConfigError("--tolerance must be non-negative");
  }
  const IncentiveProfile profile =
      ProprietyCheck(spec, args.tolerance, args.p_grid, args.step);
  const double margin = RewardMargin(spec, args.step);
  Emit(args.out_path, IncentiveProfileJson(profile, margin) + "\n", out);
  if (!args.csv_path.empty()) {
    WriteFileAtomic(args.csv_path, IncentiveProfileCsv(profile));
  }
  err << "reward margin: " << Json(margin).dump() << "\n";
  if (profile.flat) {
    err << "notice: expected reward is flat in confidence; "
           "this reward does not elicit a confidence report\n";
  } else {
    err << "proper: " << (profile.proper ? "true" : "false")
        << " (max truthfulness gap " << Json(profile.max_truthfulness_gap).dump()
        << ")\n";
  }

  RunManifest manifest;
  manifest.command = "oracle";
  manifest.config_json = Json{{"reward", Json::parse(RewardSpecJson(spec))},
                              {"step", args.step},
                              {"p_grid", args.p_grid},
                              {"tolerance", args.tolerance}}
                             .dump();
  if (!args.csv_path.empty()) manifest.outputs.push_back(args.csv_path);
  EmitManifest(args.out_path, std::move(manifest));
  return kExitOk;
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = ".";
  int workers = 0;  // 0 keeps the config's value
  int repetitions = 10;
};

std::optional<std::uint64_t> EnvSeed() {
  const char* raw = std::getenv("CAR_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(raw, &end, 10);
  if (*end != '\0') throw ConfigError("CAR_SEED must be an unsigned integer");
  return value;
}

void WriteArtifact(const fs::path& dir, const std::string& name,
                   const std::string& data, RunManifest& manifest) {
  const fs::path path = dir / name;
  WriteFileAtomic(path, data);
  manifest.outputs.push_back(path.string());
}

int RunSimulate(const SimulateArgs& args, std::ostream& out,
                std::ostream& err) {
  if (args.config_path.empty()) {
    throw ConfigError("simulate needs a config file (or the dichotomy "
                      "subcommand)");
  }
  bool config_has_seed = false;
  TrainConfig config =
      ParseTrainConfig(ReadFile(args.config_path), &config_has_seed);
  if (args.seed_set) {
    config.seed = args.seed;
  } else if (!config_has_seed) {
    config.seed = EnvSeed().value_or(0);
  }
  if (args.workers > 0) config.workers = args.workers;

  const TrainResult result = Train(config);
  const CalibrationReport final_report = BuildReport(EvaluatePolicy(
      result.policy, config.env, config.eval_episodes, EvalSeed(config.seed),
      config.workers));

  fs::create_directories(args.out_dir);
  RunManifest manifest;
  manifest.command = "simulate";
  manifest.config_json = TrainConfigJson(config);
  manifest.AddInput(args.config_path);
  WriteArtifact(args.out_dir, "trainlog.csv", TrainLogCsv(result.log),
                manifest);
  WriteArtifact(args.out_dir, "trainlog.json", TrainLogJson(result.log) + "\n",
                manifest);
  WriteArtifact(args.out_dir, "final_report.json",
                ReportJson(final_report) + "\n", manifest);
  WriteFileAtomic(fs::path(args.out_dir) / "manifest.json", manifest.ToJson());

  const TrainLogRow& last = result.log.rows.back();
  out << "iterations " << last.iteration << ": accuracy "
      << Json(last.eval_accuracy).dump() << ", ece "
      << Json(last.eval_ece).dump() << ", mean confidence "
      << Json(last.mean_confidence).dump() << "\n";
  (void)err;
  return kExitOk;
}

int RunDichotomy(const SimulateArgs& args, std::ostream& out,
                 std::ostream& err) {
  DichotomyConfig config;
  config.seed = args.seed_set ? args.seed : EnvSeed().value_or(0);
  if (args.repetitions < 1) throw ConfigError("--repetitions must be >= 1");
  config.repetitions = args.repetitions;
  if (args.workers > 0) config.base.workers = args.workers;
  const DichotomyResult result = DichotomyExperiment(config);

  fs::create_directories(args.out_dir);
  RunManifest manifest;
  manifest.command = "simulate dichotomy";
  manifest.config_json = Json{{"seed", config.seed},
                              {"repetitions", config.repetitions},
                              {"base", Json::parse(TrainConfigJson(config.base))}}
                             .dump();
  WriteArtifact(args.out_dir, "dichotomy.json", DichotomyJson(result) + "\n",
                manifest);
  WriteArtifact(args.out_dir, "evidence_trainlog.csv",
                TrainLogCsv(result.evidence_log), manifest);
  WriteArtifact(args.out_dir, "verification_trainlog.csv",
                TrainLogCsv(result.verification_log), manifest);
  WriteFileAtomic(fs::path(args.out_dir) / "manifest.json", manifest.ToJson());

  out << "verification: conditioned head beats blinded in "
      << result.verification_wins << "/" << config.repetitions
      << " seeds (sign test p " << Json(result.verification_sign_test_p).dump()
      << ")\n"
      << "evidence: conditioned head ahead in " << result.evidence_positive
      << "/" << result.evidence_nonzero << " non-tied seeds (sign test p "
      << Json(result.evidence_sign_test_p).dump() << ")\n"
      << "EM-only minimum MCIP " << Json(result.min_em_mcip).dump() << "\n";
  (void)err;
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Calibration rewards, metrics and simulations for tool-use "
               "agent trajectories",
               "car"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand(
      "score", "Score a trajectory corpus with the format-aware reward");
  score_cmd->add_option("trajectories", score.input, "Trajectory JSONL file")
      ->required();
  score.reward.Register(*score_cmd);
  score_cmd->add_option("--tool-schema", score.tool_schema,
                        "Default tool schema: search|code")
      ->capture_default_str();
  score_cmd->add_option("--out", score.out_path, "Scored JSONL output path");
  score_cmd->add_option("--workers", score.workers, "Parallel workers")
      ->check(CLI::PositiveNumber);

  ReportArgs report;
  auto* report_cmd =
      app.add_subcommand("report", "Calibration report of a predictions file");
  report_cmd->add_option("predictions", report.input, "Predictions JSONL file")
      ->required();
  report_cmd->add_option("--bins", report.bins, "Number of ECE bins")
      ->capture_default_str();
  auto* temp_opt = report_cmd->add_option(
      "--temperature", report.temperature,
      "Rescale confidences by temperature scaling before the metrics");
  report_cmd->add_option("--out", report.out_path, "Report JSON output path");
  report_cmd->add_option("--workers", report.workers, "Parallel workers")
      ->check(CLI::PositiveNumber);

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand(
      "compare", "MCIP on the shared wrong set and paired t-tests");
  compare_cmd->add_option("predictions", compare.inputs,
                          "Two or more predictions JSONL files")
      ->required();
  compare_cmd->add_option("--out", compare.out_path, "Output JSON path");

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand(
      "oracle", "Incentive profile, propriety and margin of a reward");
  oracle.reward.Register(*oracle_cmd);
  oracle_cmd->add_option("--step", oracle.step, "Confidence grid step")
      ->capture_default_str();
  oracle_cmd->add_option("--p-grid", oracle.p_grid, "Belief grid step")
      ->capture_default_str();
  oracle_cmd->add_option("--tolerance", oracle.tolerance,
                         "Propriety tolerance")
      ->capture_default_str();
  oracle_cmd->add_option("--out", oracle.out_path, "Profile JSON output path");
  oracle_cmd->add_option("--csv", oracle.csv_path, "Curve CSV output path");

  SimulateArgs simulate;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "Train a policy in a simulated tool env");
  simulate_cmd->add_option("config", simulate.config_path,
                           "Simulation config JSON");
  auto* seed_opt =
      simulate_cmd->add_option("--seed", simulate.seed,
                               "Master seed (default: config, then CAR_SEED)");
  simulate_cmd->add_option("--out", simulate.out_dir, "Output directory")
      ->capture_default_str();
  simulate_cmd->add_option("--workers", simulate.workers, "Rollout workers");
  auto* dichotomy_cmd = simulate_cmd->add_subcommand(
      "dichotomy", "Evidence vs verification feedback experiment");
  auto* dichotomy_seed =
      dichotomy_cmd->add_option("--seed", simulate.seed, "Master seed");
  dichotomy_cmd->add_option("--out", simulate.out_dir, "Output directory");
  dichotomy_cmd->add_option("--repetitions", simulate.repetitions,
                            "Paired seeds")
      ->capture_default_str();
  dichotomy_cmd->add_option("--workers", simulate.workers, "Rollout workers");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (score_cmd->parsed()) return RunScore(score, out, err);
    if (report_cmd->parsed()) {
      report.temperature_set = temp_opt->count() > 0;
      return RunReport(report, out, err);
    }
    if (compare_cmd->parsed()) return RunCompare(compare, out, err);
    if (oracle_cmd->parsed()) return RunOracle(oracle, out, err);
    if (dichotomy_cmd->parsed()) {
      simulate.seed_set = dichotomy_seed->count() > 0 || seed_opt->count() > 0;
      return RunDichotomy(simulate, out, err);
    }
    if (simulate_cmd->parsed()) {
      simulate.seed_set = seed_opt->count() > 0;
      return RunSimulate(simulate, out, err);
    }
  } catch (const IdMismatchError& e) {
    err << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace car::cli
