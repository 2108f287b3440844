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

#include "car/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "car/stats.h"

namespace car {
namespace {

struct Point {
  double confidence;
  bool correct;

  bool operator<(const Point& other) const {
    if (confidence != other.confidence) return confidence < other.confidence;
    return correct < other.correct;
  }
};

// Records reduced to (confidence, correct) in ascending order. Sums taken in
// this order do not depend on the caller's ordering.
std::vector<Point> Canonical(std::span<const PredictionRecord> records) {
  std::vector<Point> points;
  points.reserve(records.size());
  for (const PredictionRecord& r : records) {
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
      throw std::invalid_argument("record '" + r.id + "' has confidence " +
                                  std::to_string(r.confidence) +
                                  " outside [0, 1]");
    }
    points.push_back({r.confidence, r.correct});
  }
  std::sort(points.begin(), points.end());
  return points;
}

void RequireNonEmpty(std::span<const PredictionRecord> records) {
  if (records.empty()) throw std::invalid_argument("no prediction records");
}

EceResult EceOf(const std::vector<Point>& points, int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("n_bins must be positive");
  EceResult out;
  out.bins.resize(n_bins);
  std::vector<double> conf_sum(n_bins, 0.0);
  std::vector<long> hits(n_bins, 0);
  for (const Point& p : points) {
    const int b = BinIndex(p.confidence, n_bins);
    ++out.bins[b].count;
    conf_sum[b] += p.confidence;
    hits[b] += p.correct ? 1 : 0;
  }
  const auto n = static_cast<double>(points.size());
  for (int b = 0; b < n_bins; ++b) {
    BinStat& bin = out.bins[b];
    bin.lower = static_cast<double>(b) / n_bins;
    bin.upper = static_cast<double>(b + 1) / n_bins;
    if (bin.count == 0) continue;
    const auto count = static_cast<double>(bin.count);
    bin.mean_confidence = conf_sum[b] / count;
    bin.empirical_accuracy = static_cast<double>(hits[b]) / count;
    out.ece += count / n *
               std::abs(bin.empirical_accuracy - bin.mean_confidence);
  }
  return out;
}

double BrierOf(const std::vector<Point>& points) {
  double sum = 0.0;
  for (const Point& p : points) {
    const double gap = p.confidence - (p.correct ? 1.0 : 0.0);
    sum += gap * gap;
  }
  return sum / static_cast<double>(points.size());
}

std::optional<double> AurocOf(const std::vector<Point>& points) {
  std::int64_t n_correct = 0;
  std::int64_t n_wrong = 0;
  std::int64_t twice_wins = 0;
  for (size_t i = 0; i < points.size();) {
    size_t j = i;
    std::int64_t tie_correct = 0;
    std::int64_t tie_wrong = 0;
    while (j < points.size() && points[j].confidence == points[i].confidence) {
      (points[j].correct ? tie_correct : tie_wrong) += 1;
      ++j;
    }
    twice_wins += 2 * tie_correct * n_wrong + tie_correct * tie_wrong;
    n_correct += tie_correct;
    n_wrong += tie_wrong;
    i = j;
  }
  if (n_correct == 0 || n_wrong == 0) return std::nullopt;
  return static_cast<double>(twice_wins) /
         static_cast<double>(2 * n_correct * n_wrong);
}

std::optional<double> McipOf(const std::vector<Point>& points) {
  double sum = 0.0;
  long wrong = 0;
  for (const Point& p : points) {
    if (p.correct) continue;
    sum += p.confidence;
    ++wrong;
  }
  if (wrong == 0) return std::nullopt;
  return sum / static_cast<double>(wrong);
}

}  // namespace

IdMismatchError::IdMismatchError(std::vector<std::string> ids)
    : std::runtime_error([&ids] {
        std::string msg = "id universes differ:";
        for (const auto& id : ids) msg += " " + id;
        return msg;
      }()),
      ids_(std::move(ids)) {}

int BinIndex(double confidence, int n_bins) {
  const auto b = static_cast<int>(std::floor(confidence * n_bins));
  return std::clamp(b, 0, n_bins - 1);
}

EceResult Ece(std::span<const PredictionRecord> records, int n_bins) {
  RequireNonEmpty(records);
  return EceOf(Canonical(records), n_bins);
}

double Brier(std::span<const PredictionRecord> records) {
  RequireNonEmpty(records);
  return BrierOf(Canonical(records));
}

double Accuracy(std::span<const PredictionRecord> records) {
  RequireNonEmpty(records);
  const auto hits = std::count_if(records.begin(), records.end(),
                                  [](const auto& r) { return r.correct; });
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::optional<double> Auroc(std::span<const PredictionRecord> records) {
  return AurocOf(Canonical(records));
}

std::optional<double> Mcip(std::span<const PredictionRecord> records) {
  return McipOf(Canonical(records));
}

CalibrationReport BuildReport(std::span<const PredictionRecord> records,
                              int n_bins) {
  RequireNonEmpty(records);
  const std::vector<Point> points = Canonical(records);
  CalibrationReport report;
  report.n = static_cast<long>(points.size());
  long hits = 0;
  double conf_sum = 0.0;
  for (const Point& p : points) {
    hits += p.correct ? 1 : 0;
    conf_sum += p.confidence;
  }
  report.accuracy = static_cast<double>(hits) / static_cast<double>(report.n);
  report.mean_confidence = conf_sum / static_cast<double>(report.n);
  EceResult ece = EceOf(points, n_bins);
  report.ece = ece.ece;
  report.bins = std::move(ece.bins);
  report.brier = BrierOf(points);
  report.auroc = AurocOf(points);
  report.mcip = McipOf(points);
  return report;
}

std::set<std::string> IntersectWrong(
    const std::map<std::string, std::vector<PredictionRecord>>& runs) {
  if (runs.size() < 2) {
    throw std::invalid_argument("intersection needs at least two runs");
  }
  std::vector<std::set<std::string>> universes;
  std::map<std::string, int> wrong_counts;
  for (const auto& [label, records] : runs) {
    std::set<std::string> ids;
    for (const PredictionRecord& r : records) {
      if (!ids.insert(r.id).second) {
        throw std::invalid_argument("run '" + label + "' repeats id '" +
                                    r.id + "'");
      }
      if (!r.correct) ++wrong_counts[r.id];
    }
    universes.push_back(std::move(ids));
  }
  std::set<std::string> mismatched;
  for (size_t i = 1; i < universes.size(); ++i) {
    std::set_symmetric_difference(
        universes[0].begin(), universes[0].end(), universes[i].begin(),
        universes[i].end(), std::inserter(mismatched, mismatched.end()));
  }
  if (!mismatched.empty()) {
    throw IdMismatchError({mismatched.begin(), mismatched.end()});
  }
  std::set<std::string> out;
  for (const auto& [id, count] : wrong_counts) {
    if (count == static_cast<int>(runs.size())) out.insert(id);
  }
  return out;
}

TTestResult PairedTTest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired t-test needs equally sized samples");
  }
  if (a.size() < 2) {
    throw std::invalid_argument("paired t-test needs at least two pairs");
  }
  const auto n = static_cast<double>(a.size());
  std::vector<double> d(a.size());
  double mean = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    d[i] = a[i] - b[i];
    mean += d[i];
  }
  mean /= n;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  TTestResult out;
  out.degrees_of_freedom = static_cast<int>(a.size()) - 1;
  if (sd == 0.0) {
    if (mean == 0.0) return out;
    out.t_statistic = std::copysign(std::numeric_limits<double>::infinity(),
                                    mean);
    out.p_value = 0.0;
    out.degenerate = true;
    return out;
  }
  out.t_statistic = mean / (sd / std::sqrt(n));
  out.p_value = StudentTTwoSidedP(out.t_statistic, out.degrees_of_freedom);
  return out;
}

double TemperatureScale(double q, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::domain_error("temperature must be positive");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::domain_error("confidence outside [0, 1]");
  }
  if (temperature == 1.0) return q;
  const double c = std::clamp(q, kTemperatureClamp, 1.0 - kTemperatureClamp);
  const double z = (std::log(c) - std::log1p(-c)) / temperature;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace car
