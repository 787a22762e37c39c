#pragma once

#include "cbfmsc/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace cbfmsc {

/// v feature matrices X_i (d_i x n) observed over the same n samples.
template <typename Scalar>
struct MultiViewData {
  std::vector<MatrixX<Scalar>> views;

  MultiViewData() = default;
  explicit MultiViewData(std::vector<MatrixX<Scalar>> v) : views(std::move(v)) {}

  Index samples() const { return views.empty() ? 0 : views.front().cols(); }
  Index view_count() const { return static_cast<Index>(views.size()); }

  void validate() const {
    if (views.empty()) throw InvalidArgument("multi-view data has no views");
    const Index n = views.front().cols();
    if (n < 1) throw InvalidArgument("multi-view data has no samples");
    for (std::size_t i = 0; i < views.size(); ++i) {
      const auto& x = views[i];
      if (x.rows() < 1) {
        throw InvalidArgument("view " + std::to_string(i) + " has zero features");
      }
      if (x.cols() != n) {
        throw InvalidArgument("view " + std::to_string(i) + " has " + std::to_string(x.cols()) +
                              " samples, expected " + std::to_string(n));
      }
      require_finite(x, "multi-view data");
    }
  }
};

}  // namespace cbfmsc
