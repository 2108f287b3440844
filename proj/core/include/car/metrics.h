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

// Calibration metrics over (confidence, correctness) records.
//
// Every aggregate is computed over the records in a canonical order, so the
// results are bitwise independent of input order and of how the records were
// sharded before being gathered.

#ifndef CAR_METRICS_H_
#define CAR_METRICS_H_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace car {

struct PredictionRecord {
  std::string id;
  double confidence = 0.0;
  bool correct = false;
  std::optional<std::string> config_label;

  bool operator==(const PredictionRecord&) const = default;
};

struct BinStat {
  double lower = 0.0;
  double upper = 0.0;
  long count = 0;
  double mean_confidence = 0.0;     // 0 for empty bins
  double empirical_accuracy = 0.0;  // 0 for empty bins
};

struct EceResult {
  double ece = 0.0;
  std::vector<BinStat> bins;
};

struct CalibrationReport {
  long n = 0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
  double ece = 0.0;
  double brier = 0.0;
  std::optional<double> auroc;  // undefined for single-class corpora
  std::optional<double> mcip;   // undefined without incorrect records
  std::vector<BinStat> bins;
};

struct TTestResult {
  double t_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;  // two-sided
  // Zero variance with a nonzero mean difference: t is infinite, p is 0.
  bool degenerate = false;
};

// Thrown when runs compared against each other cover different ids.
class IdMismatchError : public std::runtime_error {
 public:
  explicit IdMismatchError(std::vector<std::string> ids);
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

// Bin of confidence c among n equal-width bins; c = 1 lands in the top bin.
int BinIndex(double confidence, int n_bins);

// All of the following throw std::invalid_argument on empty input or
// confidences outside [0, 1].
EceResult Ece(std::span<const PredictionRecord> records, int n_bins = 10);
double Brier(std::span<const PredictionRecord> records);
double Accuracy(std::span<const PredictionRecord> records);

// Mann-Whitney probability that a correct record outranks an incorrect one,
// ties counted one half.
std::optional<double> Auroc(std::span<const PredictionRecord> records);

// Mean confidence over incorrect records.
std::optional<double> Mcip(std::span<const PredictionRecord> records);

CalibrationReport BuildReport(std::span<const PredictionRecord> records,
                              int n_bins = 10);

// Ids wrong in every run. Requires at least two runs over one id universe;
// throws IdMismatchError with the symmetric difference otherwise.
std::set<std::string> IntersectWrong(
    const std::map<std::string, std::vector<PredictionRecord>>& runs);

// Paired two-sided Student t-test on a - b. Requires |a| = |b| >= 2.
TTestResult PairedTTest(std::span<const double> a, std::span<const double> b);

// sigma(logit(clamp(q)) / T) with the clamp at [1e-6, 1 - 1e-6]. T = 1 is
// the identity. T <= 0 throws std::domain_error.
double TemperatureScale(double q, double temperature);

inline constexpr double kTemperatureClamp = 1e-6;

}  // namespace car

#endif  // CAR_METRICS_H_
