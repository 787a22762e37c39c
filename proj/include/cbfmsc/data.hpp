#pragma once

// Multi-view dataset files and the synthetic union-of-subspaces generator.
//
// On disk a dataset is a manifest plus one CSV per view and an optional
// labels file. The manifest is line-oriented `key = value` text:
//
//   # comment
//   name = synth
//   n = 120
//   c = 4
//   view = view0, 60, view0.csv
//   view = view1, 80, view1.csv
//   labels = labels.csv
//
// `view` lines are ordered and carry (name, dimension, path). Paths are
// relative to the manifest's directory. A view CSV holds d_i rows (features)
// of n comma-separated reals (samples), UTF-8, '.' decimal point, no header.
// The labels file has one 0-based integer per line.

#include "cbfmsc/common.hpp"
#include "cbfmsc/multiview.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cbfmsc {

struct ViewEntry {
  std::string name;
  Index dimension = 0;
  std::string path;
};

struct DatasetManifest {
  std::string name;
  Index n = 0;
  int c = 0;
  std::vector<ViewEntry> views;
  std::optional<std::string> labels_path;

  static DatasetManifest parse(const std::string& text, const std::string& origin = "manifest");
  std::string to_string() const;
};

struct MultiViewDataset {
  std::string name;
  int clusters = 0;
  std::vector<std::string> view_names;
  MultiViewData<double> data;
  std::optional<Labels> labels;

  Index samples() const { return data.samples(); }
};

/// Reads the manifest and every file it references, validating shapes and
/// label ranges.
MultiViewDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes manifest.txt, <view name>.csv per view and labels.csv (when labels
/// are present) into `directory`, creating it if needed. Returns the
/// manifest path.
std::filesystem::path write_dataset(const MultiViewDataset& dataset,
                                    const std::filesystem::path& directory);

struct SynthParams {
  int clusters = 4;
  int subspace_dim = 4;
  std::vector<Index> view_dims = {60, 80};
  int per_cluster = 30;
  double sigma = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Each cluster t gets one Gaussian coefficient block C_t (s x m) shared by
/// all views; view i observes B_t^(i) C_t + sigma * noise with a random
/// orthonormal basis B_t^(i) (d_i x s). Columns are grouped by cluster.
MultiViewDataset synth_multiview(const SynthParams& params);

enum class Normalization { None, UnitColumn };

Normalization parse_normalization(const std::string& text);
std::string to_string(Normalization mode);

/// UnitColumn divides every nonzero column by its Euclidean norm.
Matrix normalize_view(const Matrix& x, Normalization mode);

/// Applies normalize_view to every view.
MultiViewDataset normalize_dataset(MultiViewDataset dataset, Normalization mode);

/// Shortest decimal text that reads back to the same double.
std::string format_real(double value);

}  // namespace cbfmsc
