#pragma once

#include "cbfmsc/common.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace cbfmsc {

/// Symmetric nonnegative n x n similarity matrix.
class Affinity {
 public:
  /// Checks exact symmetry and nonnegativity.
  explicit Affinity(Matrix w);

  const Matrix& matrix() const { return w_; }
  Index size() const { return w_.rows(); }

 private:
  struct Trusted {};
  Affinity(Matrix w, Trusted) : w_(std::move(w)) {}
  friend Affinity build_affinity(const Matrix& z);

  Matrix w_;
};

/// W = (|Z| + |Z^T|) / 2.
Affinity build_affinity(const Matrix& z);

/// I - D^{-1/2} W D^{-1/2}, degrees clamped to 1e-12.
Matrix normalized_laplacian(const Affinity& w);

/// Rows of the c eigenvectors with smallest Laplacian eigenvalue, each row
/// scaled to unit length (zero rows left as is).
Matrix spectral_embedding(const Affinity& w, int c);

struct KMeansResult {
  Labels labels;
  Matrix centers;  // k x dim
  double cost = 0.0;  // within-cluster sum of squares
  std::vector<double> cost_history;  // one entry per Lloyd assignment step
};

/// Lloyd iterations from the given initial centers (k x dim) on the rows of
/// points, stopping when assignments stop changing or after max_iter steps.
KMeansResult lloyd(const Matrix& points, Matrix centers, int max_iter = 300);

/// k-means++ seeded Lloyd, best of `restarts` by cost (ties to the lowest
/// restart index). Points are the rows of `points`.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts = 20);

/// Ng-Jordan-Weiss spectral clustering into c groups.
Labels spectral_cluster(const Affinity& w, int c, std::uint64_t seed, int restarts = 20);

}  // namespace cbfmsc
