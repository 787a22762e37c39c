#pragma once

// External clustering quality measures comparing predicted labels to ground
// truth, plus mean/std aggregation over repeated runs. Labels may be any
// nonnegative integers; they are compacted internally.

#include "cbfmsc/common.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace cbfmsc {

/// counts(p, t) = number of samples with predicted cluster p and true class t.
struct ContingencyTable {
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;
  long n = 0;

  static ContingencyTable build(const Labels& pred, const Labels& truth);
};

double nmi(const Labels& pred, const Labels& truth);

/// Best one-to-one matching accuracy (Hungarian assignment).
double acc(const Labels& pred, const Labels& truth);

struct PairwiseScores {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

PairwiseScores pairwise_scores(const Labels& pred, const Labels& truth);

/// Size-weighted base-2 entropy of the true classes inside each predicted
/// cluster. Lower is better.
double avgent(const Labels& pred, const Labels& truth);

/// Maximum-total-benefit assignment of rows to columns of a square matrix.
/// Returns the column assigned to each row.
std::vector<Index> max_weight_assignment(const Matrix& benefit);

enum class Metric { Nmi, Acc, FScore, Avg, Precision };
inline constexpr std::array<Metric, 5> kAllMetrics = {Metric::Nmi, Metric::Acc, Metric::FScore,
                                                      Metric::Avg, Metric::Precision};
std::string_view metric_name(Metric m);
/// True for every metric except AVG.
bool higher_is_better(Metric m);

struct MetricValues {
  double nmi = 0.0;
  double acc = 0.0;
  double f_score = 0.0;
  double avg = 0.0;
  double precision = 0.0;

  double get(Metric m) const;
};

MetricValues evaluate(const Labels& pred, const Labels& truth);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population (divide by N)
};

struct MetricsReport {
  MetricSummary nmi, acc, f_score, avg, precision;
  std::size_t runs = 0;

  const MetricSummary& get(Metric m) const;
};

MetricsReport aggregate(const std::vector<MetricValues>& runs);

}  // namespace cbfmsc
