#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "neutral/errors.hpp"

namespace neutral {

// Area under the ROC curve through the Mann-Whitney rank statistic. Tied
// scores share their average rank, so each tied (inlier, anomaly) pair
// counts one half. labels: 1 = anomaly.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc: scores and labels differ in length");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw MetricError("auc: labels must be 0 or 1");
    pos += static_cast<std::size_t>(l);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw MetricError("auc is undefined unless both classes are present");
  for (double s : scores)
    if (std::isnan(s)) throw MetricError("auc: NaN score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum += avg_rank;
    i = j;
  }
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

// F1 of the anomaly class when the top-A scores are flagged, A being the
// true anomaly count. Equal scores keep their input order (stable sort), so
// earlier samples win ties.
inline double f1_at_contamination(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("f1: scores and labels differ in length");
  std::size_t A = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw MetricError("f1: labels must be 0 or 1");
    A += static_cast<std::size_t>(l);
  }
  if (A == 0) throw MetricError("f1 at contamination is undefined without anomalies");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t tp = 0;
  for (std::size_t i = 0; i < A; ++i) tp += static_cast<std::size_t>(labels[order[i]]);
  if (tp == 0) return 0.0;
  // A predictions and A true anomalies: precision = recall = tp / A.
  const double precision = static_cast<double>(tp) / static_cast<double>(A);
  const double recall = precision;
  return 2.0 * precision * recall / (precision + recall);
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

// Population standard deviation.
inline MeanStd mean_std(std::span<const double> v) {
  if (v.empty()) return {};
  MeanStd r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  for (double x : v) r.stddev += (x - r.mean) * (x - r.mean);
  r.stddev = std::sqrt(r.stddev / static_cast<double>(v.size()));
  return r;
}

}  // namespace neutral
