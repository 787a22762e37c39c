#include "cbfmsc/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <random>
#include <string>

namespace cbfmsc {

namespace {

constexpr double kMinDegree = 1e-12;

double squared_distance(const Matrix& points, Index row, const Matrix& centers, Index center) {
  return (points.row(row) - centers.row(center)).squaredNorm();
}

Matrix plus_plus_seeds(const Matrix& points, int k, std::mt19937_64& rng) {
  const Index n = points.rows();
  Matrix centers(k, points.cols());
  std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);

  Index pick = std::uniform_int_distribution<Index>(0, n - 1)(rng);
  for (int c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (double d : nearest) total += d;
      if (total > 0.0) {
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        pick = n - 1;
        for (Index i = 0; i < n; ++i) {
          target -= nearest[static_cast<std::size_t>(i)];
          if (target < 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        // Every point coincides with a chosen center; take an unused index.
        std::vector<Index> unused;
        for (Index i = 0; i < n; ++i) {
          if (!chosen[static_cast<std::size_t>(i)]) unused.push_back(i);
        }
        pick = unused[std::uniform_int_distribution<std::size_t>(0, unused.size() - 1)(rng)];
      }
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    centers.row(c) = points.row(pick);
    for (Index i = 0; i < n; ++i) {
      auto& d = nearest[static_cast<std::size_t>(i)];
      d = std::min(d, squared_distance(points, i, centers, c));
    }
  }
  return centers;
}

}  // namespace

Affinity::Affinity(Matrix w) : w_(std::move(w)) {
  if (w_.rows() != w_.cols()) throw InvalidArgument("affinity must be square");
  require_finite(w_, "affinity");
  if ((w_.array() < 0.0).any()) throw InvalidArgument("affinity has negative entries");
  if (w_ != w_.transpose()) throw InvalidArgument("affinity is not symmetric");
}

Affinity build_affinity(const Matrix& z) {
  if (z.rows() != z.cols()) {
    throw InvalidArgument("build_affinity: coefficient matrix is " + std::to_string(z.rows()) + "x" +
                          std::to_string(z.cols()) + ", expected square");
  }
  require_finite(z, "build_affinity");
  const Index n = z.rows();
  Matrix w(n, n);
  // Fill both triangles from one value so symmetry is exact.
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      const double value = (std::abs(z(i, j)) + std::abs(z(j, i))) / 2.0;
      w(i, j) = value;
      w(j, i) = value;
    }
  }
  return Affinity(std::move(w), Affinity::Trusted{});
}

Matrix normalized_laplacian(const Affinity& affinity) {
  const Matrix& w = affinity.matrix();
  const Vector inv_sqrt_degree =
      w.rowwise().sum().cwiseMax(kMinDegree).cwiseSqrt().cwiseInverse();
  Matrix lap = -(inv_sqrt_degree.asDiagonal() * w * inv_sqrt_degree.asDiagonal());
  lap.diagonal().array() += 1.0;
  // Re-symmetrize against rounding in the two-sided scaling.
  return (lap + lap.transpose()) / 2.0;
}

Matrix spectral_embedding(const Affinity& w, int c) {
  if (c < 1 || c > w.size()) {
    throw InvalidArgument("spectral_embedding: need 1 <= c <= n");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(normalized_laplacian(w));
  if (eig.info() != Eigen::Success) throw NumericFailure("Laplacian eigendecomposition failed");
  Matrix embedding = eig.eigenvectors().leftCols(c);
  for (Index i = 0; i < embedding.rows(); ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  return embedding;
}

KMeansResult lloyd(const Matrix& points, Matrix centers, int max_iter) {
  const Index n = points.rows();
  const Index k = centers.rows();
  KMeansResult result;
  result.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);

  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    double cost = 0.0;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double best_d = squared_distance(points, i, centers, 0);
      for (Index c = 1; c < k; ++c) {
        const double d = squared_distance(points, i, centers, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      auto& label = result.labels[static_cast<std::size_t>(i)];
      if (label != static_cast<int>(best)) changed = true;
      label = static_cast<int>(best);
      dist[static_cast<std::size_t>(i)] = best_d;
      cost += best_d;
    }
    result.cost_history.push_back(cost);
    result.cost = cost;
    if (!changed) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      const auto label = result.labels[static_cast<std::size_t>(i)];
      sums.row(label) += points.row(i);
      ++counts[static_cast<std::size_t>(label)];
    }
    for (Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Empty cluster: move its center onto the worst-served point.
        const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
        centers.row(c) = points.row(far);
        dist[static_cast<std::size_t>(far)] = 0.0;
      }
    }
  }
  result.centers = std::move(centers);
  return result;
}

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts) {
  if (k < 1) throw InvalidArgument("kmeans: k must be >= 1");
  if (k > points.rows()) {
    throw InvalidArgument("kmeans: k = " + std::to_string(k) + " exceeds point count " +
                          std::to_string(points.rows()));
  }
  if (restarts < 1) throw InvalidArgument("kmeans: restarts must be >= 1");
  require_finite(points, "kmeans");

  std::mt19937_64 rng(seed);
  KMeansResult best;
  for (int r = 0; r < restarts; ++r) {
    auto run = lloyd(points, plus_plus_seeds(points, k, rng));
    if (r == 0 || run.cost < best.cost) best = std::move(run);
  }
  return best;
}

Labels spectral_cluster(const Affinity& w, int c, std::uint64_t seed, int restarts) {
  if (c < 2) throw InvalidArgument("spectral_cluster: need c >= 2");
  if (c > w.size()) {
    throw InvalidArgument("spectral_cluster: c = " + std::to_string(c) + " exceeds n = " +
                          std::to_string(w.size()));
  }
  return kmeans(spectral_embedding(w, c), c, seed, restarts).labels;
}

}  // namespace cbfmsc
