#include "cbfmsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace cbfmsc {

namespace {

void check_lengths(const Labels& pred, const Labels& truth) {
  if (pred.size() != truth.size()) {
    throw InvalidArgument("label vectors differ in length: " + std::to_string(pred.size()) + " vs " +
                          std::to_string(truth.size()));
  }
  if (pred.empty()) throw InvalidArgument("label vectors are empty");
}

// Maps arbitrary nonnegative labels onto 0..c-1 preserving order.
std::vector<Index> compact(const Labels& labels, Index& count) {
  std::map<int, Index> ids;
  for (int l : labels) {
    if (l < 0) throw InvalidArgument("negative label " + std::to_string(l));
    ids.emplace(l, 0);
  }
  Index next = 0;
  for (auto& [label, id] : ids) id = next++;
  count = next;
  std::vector<Index> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids.at(l));
  return out;
}

double choose2(long m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); }

double entropy(const Eigen::Matrix<long, Eigen::Dynamic, 1>& counts, double total, double log_base) {
  double h = 0.0;
  for (Index i = 0; i < counts.size(); ++i) {
    if (counts(i) > 0) {
      const double p = static_cast<double>(counts(i)) / total;
      h -= p * std::log(p);
    }
  }
  return h / log_base;
}

}  // namespace

ContingencyTable ContingencyTable::build(const Labels& pred, const Labels& truth) {
  check_lengths(pred, truth);
  Index cp = 0;
  Index ct = 0;
  const auto p = compact(pred, cp);
  const auto t = compact(truth, ct);
  ContingencyTable table;
  table.counts = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(cp, ct);
  for (std::size_t i = 0; i < p.size(); ++i) ++table.counts(p[i], t[i]);
  table.n = static_cast<long>(pred.size());
  return table;
}

double nmi(const Labels& pred, const Labels& truth) {
  const auto table = ContingencyTable::build(pred, truth);
  const auto& c = table.counts;
  const double n = static_cast<double>(table.n);

  // Identical partitions: one nonzero cell per row and per column.
  if (c.rows() == c.cols()) {
    const auto nonzero = (c.array() > 0).cast<int>();
    if ((nonzero.rowwise().sum() == 1).all() && (nonzero.colwise().sum() == 1).all()) return 1.0;
  }

  const Eigen::Matrix<long, Eigen::Dynamic, 1> row_sums = c.rowwise().sum();
  const Eigen::Matrix<long, Eigen::Dynamic, 1> col_sums = c.colwise().sum().transpose();
  const double hp = entropy(row_sums, n, 1.0);
  const double ht = entropy(col_sums, n, 1.0);
  if (hp <= 0.0 || ht <= 0.0) return 0.0;

  double mi = 0.0;
  for (Index i = 0; i < c.rows(); ++i) {
    for (Index j = 0; j < c.cols(); ++j) {
      if (c(i, j) == 0) continue;
      const double nij = static_cast<double>(c(i, j));
      mi += (nij / n) * std::log(n * nij / (static_cast<double>(row_sums(i)) *
                                            static_cast<double>(col_sums(j))));
    }
  }
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

std::vector<Index> max_weight_assignment(const Matrix& benefit) {
  if (benefit.rows() != benefit.cols()) {
    throw InvalidArgument("max_weight_assignment: matrix must be square");
  }
  // Shortest augmenting path Hungarian method on cost = -benefit, 1-based
  // with a sentinel column 0.
  const Index n = benefit.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> match(n + 1, 0), way(n + 1, 0);
  for (Index row = 1; row <= n; ++row) {
    match[0] = row;
    Index col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const Index row0 = match[col0];
      double delta = inf;
      Index col1 = 0;
      for (Index col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const double cur = -benefit(row0 - 1, col - 1) - u[row0] - v[col];
        if (cur < minv[col]) {
          minv[col] = cur;
          way[col] = col0;
        }
        if (minv[col] < delta) {
          delta = minv[col];
          col1 = col;
        }
      }
      for (Index col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match[col]] += delta;
          v[col] -= delta;
        } else {
          minv[col] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const Index col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<Index> assignment(n, 0);
  for (Index col = 1; col <= n; ++col) assignment[match[col] - 1] = col - 1;
  return assignment;
}

double acc(const Labels& pred, const Labels& truth) {
  const auto table = ContingencyTable::build(pred, truth);
  const Index size = std::max(table.counts.rows(), table.counts.cols());
  // Pad to square with zero-benefit rows/columns.
  Matrix benefit = Matrix::Zero(size, size);
  benefit.topLeftCorner(table.counts.rows(), table.counts.cols()) = table.counts.cast<double>();
  const auto assignment = max_weight_assignment(benefit);
  double matched = 0.0;
  for (Index r = 0; r < size; ++r) matched += benefit(r, assignment[r]);
  return matched / static_cast<double>(table.n);
}

PairwiseScores pairwise_scores(const Labels& pred, const Labels& truth) {
  const auto table = ContingencyTable::build(pred, truth);
  if (table.n < 2) throw InvalidArgument("pairwise_scores: need at least two samples");
  const auto& c = table.counts;
  double together_both = 0.0;
  for (Index i = 0; i < c.size(); ++i) together_both += choose2(c.data()[i]);
  double together_pred = 0.0;
  for (Index i = 0; i < c.rows(); ++i) together_pred += choose2(c.row(i).sum());
  double together_truth = 0.0;
  for (Index j = 0; j < c.cols(); ++j) together_truth += choose2(c.col(j).sum());

  PairwiseScores s;
  s.precision = together_pred > 0.0 ? together_both / together_pred : 1.0;
  s.recall = together_truth > 0.0 ? together_both / together_truth : 1.0;
  const double denom = s.precision + s.recall;
  s.f_score = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

double avgent(const Labels& pred, const Labels& truth) {
  const auto table = ContingencyTable::build(pred, truth);
  const auto& c = table.counts;
  const double n = static_cast<double>(table.n);
  double total = 0.0;
  for (Index i = 0; i < c.rows(); ++i) {
    const Eigen::Matrix<long, Eigen::Dynamic, 1> row = c.row(i).transpose();
    const double size = static_cast<double>(row.sum());
    total += (size / n) * entropy(row, size, std::log(2.0));
  }
  return total;
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::Nmi: return "NMI";
    case Metric::Acc: return "ACC";
    case Metric::FScore: return "F-score";
    case Metric::Avg: return "AVG";
    case Metric::Precision: return "P";
  }
  return "?";
}

bool higher_is_better(Metric m) { return m != Metric::Avg; }

double MetricValues::get(Metric m) const {
  switch (m) {
    case Metric::Nmi: return nmi;
    case Metric::Acc: return acc;
    case Metric::FScore: return f_score;
    case Metric::Avg: return avg;
    case Metric::Precision: return precision;
  }
  return 0.0;
}

const MetricSummary& MetricsReport::get(Metric m) const {
  switch (m) {
    case Metric::Nmi: return nmi;
    case Metric::Acc: return acc;
    case Metric::FScore: return f_score;
    case Metric::Avg: return avg;
    case Metric::Precision: return precision;
  }
  return nmi;
}

MetricValues evaluate(const Labels& pred, const Labels& truth) {
  MetricValues v;
  v.nmi = nmi(pred, truth);
  v.acc = acc(pred, truth);
  const auto pw = pairwise_scores(pred, truth);
  v.f_score = pw.f_score;
  v.precision = pw.precision;
  v.avg = avgent(pred, truth);
  return v;
}

MetricsReport aggregate(const std::vector<MetricValues>& runs) {
  if (runs.empty()) throw InvalidArgument("aggregate: no runs");
  const double count = static_cast<double>(runs.size());
  auto summarize = [&](Metric m) {
    MetricSummary s;
    double lo = runs.front().get(m);
    double hi = lo;
    for (const auto& r : runs) {
      s.mean += r.get(m);
      lo = std::min(lo, r.get(m));
      hi = std::max(hi, r.get(m));
    }
    // Summation rounding must not push the mean outside the observed range.
    s.mean = std::clamp(s.mean / count, lo, hi);
    double var = 0.0;
    for (const auto& r : runs) var += (r.get(m) - s.mean) * (r.get(m) - s.mean);
    s.std = std::sqrt(var / count);
    return s;
  };
  MetricsReport report;
  report.nmi = summarize(Metric::Nmi);
  report.acc = summarize(Metric::Acc);
  report.f_score = summarize(Metric::FScore);
  report.avg = summarize(Metric::Avg);
  report.precision = summarize(Metric::Precision);
  report.runs = runs.size();
  return report;
}

}  // namespace cbfmsc
