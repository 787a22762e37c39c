#include "cbfmsc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace cbfmsc {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && begin != end;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

Matrix read_view_csv(const fs::path& path, const ViewEntry& view, Index n) {
  const auto lines = lines_of(read_file(path));
  const std::string where = "view '" + view.name + "' (" + path.string() + ")";
  if (static_cast<Index>(lines.size()) != view.dimension) {
    throw FormatError(where + ": has " + std::to_string(lines.size()) + " rows, manifest says " +
                      std::to_string(view.dimension));
  }
  Matrix x(view.dimension, n);
  for (Index r = 0; r < view.dimension; ++r) {
    const auto cells = split(lines[static_cast<std::size_t>(r)], ',');
    if (static_cast<Index>(cells.size()) != n) {
      throw FormatError(where + ": row " + std::to_string(r + 1) + " has " +
                        std::to_string(cells.size()) + " columns, manifest says n = " +
                        std::to_string(n));
    }
    for (Index c = 0; c < n; ++c) {
      double value = 0.0;
      const auto& cell = cells[static_cast<std::size_t>(c)];
      if (!parse_number(cell, value) || !std::isfinite(value)) {
        throw FormatError(where + ": non-numeric cell '" + cell + "' at row " +
                          std::to_string(r + 1) + ", column " + std::to_string(c + 1));
      }
      x(r, c) = value;
    }
  }
  return x;
}

Labels read_labels(const fs::path& path, Index n, int c) {
  const auto lines = lines_of(read_file(path));
  if (static_cast<Index>(lines.size()) != n) {
    throw FormatError("labels (" + path.string() + "): " + std::to_string(lines.size()) +
                      " entries, expected " + std::to_string(n));
  }
  Labels labels;
  labels.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    int value = 0;
    const auto cell = trim(lines[i]);
    if (!parse_number(cell, value)) {
      throw FormatError("labels (" + path.string() + "): non-integer '" + cell + "' at line " +
                        std::to_string(i + 1));
    }
    if (value < 0 || value >= c) {
      throw FormatError("labels (" + path.string() + "): label " + std::to_string(value) +
                        " at line " + std::to_string(i + 1) + " outside [0, " + std::to_string(c) +
                        ")");
    }
    labels.push_back(value);
  }
  return labels;
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, ptr);
}

DatasetManifest DatasetManifest::parse(const std::string& text, const std::string& origin) {
  DatasetManifest m;
  bool have_n = false;
  bool have_c = false;
  const auto lines = lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = origin + ":" + std::to_string(i + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(where + ": expected 'key = value'");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    if (key == "name") {
      m.name = value;
    } else if (key == "n") {
      if (!parse_number(value, m.n) || m.n < 1) throw FormatError(where + ": bad sample count");
      have_n = true;
    } else if (key == "c") {
      if (!parse_number(value, m.c) || m.c < 1) throw FormatError(where + ": bad cluster count");
      have_c = true;
    } else if (key == "view") {
      const auto parts = split(value, ',');
      ViewEntry v;
      if (parts.size() != 3 || parts[0].empty() || parts[2].empty() ||
          !parse_number(parts[1], v.dimension) || v.dimension < 1) {
        throw FormatError(where + ": expected 'view = name, dimension, path'");
      }
      v.name = parts[0];
      v.path = parts[2];
      m.views.push_back(std::move(v));
    } else if (key == "labels") {
      if (value.empty()) throw FormatError(where + ": empty labels path");
      m.labels_path = value;
    } else {
      throw FormatError(where + ": unknown key '" + key + "'");
    }
  }
  if (!have_n) throw FormatError(origin + ": missing 'n'");
  if (!have_c) throw FormatError(origin + ": missing 'c'");
  if (m.views.empty()) throw FormatError(origin + ": no views listed");
  return m;
}

std::string DatasetManifest::to_string() const {
  std::ostringstream out;
  out << "name = " << name << "\n";
  out << "n = " << n << "\n";
  out << "c = " << c << "\n";
  for (const auto& v : views) out << "view = " << v.name << ", " << v.dimension << ", " << v.path << "\n";
  if (labels_path) out << "labels = " << *labels_path << "\n";
  return out.str();
}

MultiViewDataset load_dataset(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) throw NotFound("manifest not found: " + manifest_path.string());
  const auto manifest = DatasetManifest::parse(read_file(manifest_path), manifest_path.string());
  const auto base = manifest_path.parent_path();

  MultiViewDataset ds;
  ds.name = manifest.name;
  ds.clusters = manifest.c;
  for (const auto& v : manifest.views) {
    const auto path = base / v.path;
    if (!fs::exists(path)) throw NotFound("view '" + v.name + "' file not found: " + path.string());
    ds.data.views.push_back(read_view_csv(path, v, manifest.n));
    ds.view_names.push_back(v.name);
  }
  if (manifest.labels_path) {
    const auto path = base / *manifest.labels_path;
    if (!fs::exists(path)) throw NotFound("labels file not found: " + path.string());
    ds.labels = read_labels(path, manifest.n, manifest.c);
  }
  return ds;
}

fs::path write_dataset(const MultiViewDataset& ds, const fs::path& directory) {
  ds.data.validate();
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());

  DatasetManifest m;
  m.name = ds.name;
  m.n = ds.samples();
  m.c = ds.clusters;
  for (std::size_t i = 0; i < ds.data.views.size(); ++i) {
    const auto& x = ds.data.views[i];
    const std::string name =
        i < ds.view_names.size() ? ds.view_names[i] : "view" + std::to_string(i);
    const std::string file = name + ".csv";
    std::string text;
    for (Index r = 0; r < x.rows(); ++r) {
      for (Index c = 0; c < x.cols(); ++c) {
        if (c > 0) text += ',';
        text += format_real(x(r, c));
      }
      text += '\n';
    }
    write_file(directory / file, text);
    m.views.push_back({name, x.rows(), file});
  }
  if (ds.labels) {
    std::string text;
    for (int l : *ds.labels) text += std::to_string(l) + "\n";
    write_file(directory / "labels.csv", text);
    m.labels_path = "labels.csv";
  }
  const auto manifest_path = directory / "manifest.txt";
  write_file(manifest_path, m.to_string());
  return manifest_path;
}

void SynthParams::validate() const {
  if (clusters < 1) throw InvalidArgument("synth: clusters must be >= 1");
  if (subspace_dim < 1) throw InvalidArgument("synth: subspace dimension must be >= 1");
  if (per_cluster < 1) throw InvalidArgument("synth: samples per cluster must be >= 1");
  if (!(sigma >= 0.0)) throw InvalidArgument("synth: sigma must be nonnegative");
  if (view_dims.empty()) throw InvalidArgument("synth: need at least one view");
  for (const auto d : view_dims) {
    if (subspace_dim >= d) {
      throw InvalidArgument("synth: subspace dimension " + std::to_string(subspace_dim) +
                            " must be below view dimension " + std::to_string(d));
    }
  }
}

MultiViewDataset synth_multiview(const SynthParams& p) {
  p.validate();
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Index rows, Index cols) {
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
    }
    return out;
  };

  const Index m = p.per_cluster;
  const Index n = m * p.clusters;
  std::vector<Matrix> coefficients;
  for (int t = 0; t < p.clusters; ++t) coefficients.push_back(gaussian(p.subspace_dim, m));

  MultiViewDataset ds;
  ds.name = "synth";
  ds.clusters = p.clusters;
  for (std::size_t i = 0; i < p.view_dims.size(); ++i) {
    const Index d = p.view_dims[i];
    Matrix x(d, n);
    for (int t = 0; t < p.clusters; ++t) {
      Eigen::HouseholderQR<Matrix> qr(gaussian(d, p.subspace_dim));
      const Matrix basis = qr.householderQ() * Matrix::Identity(d, p.subspace_dim);
      x.middleCols(t * m, m) = basis * coefficients[static_cast<std::size_t>(t)];
    }
    if (p.sigma > 0.0) x += p.sigma * gaussian(d, n);
    ds.data.views.push_back(std::move(x));
    ds.view_names.push_back("view" + std::to_string(i));
  }
  Labels labels(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) labels[static_cast<std::size_t>(j)] = static_cast<int>(j / m);
  ds.labels = std::move(labels);
  return ds;
}

Normalization parse_normalization(const std::string& text) {
  if (text == "none") return Normalization::None;
  if (text == "unit-column") return Normalization::UnitColumn;
  throw InvalidArgument("unknown normalization '" + text + "' (expected none or unit-column)");
}

std::string to_string(Normalization mode) {
  return mode == Normalization::None ? "none" : "unit-column";
}

Matrix normalize_view(const Matrix& x, Normalization mode) {
  if (mode == Normalization::None) return x;
  Matrix out = x;
  for (Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (norm > 0.0) out.col(j) /= norm;
  }
  return out;
}

MultiViewDataset normalize_dataset(MultiViewDataset ds, Normalization mode) {
  for (auto& x : ds.data.views) x = normalize_view(x, mode);
  return ds;
}

}  // namespace cbfmsc
