#include "cbfmsc/experiment.hpp"

#include "cbfmsc/lrr.hpp"
#include "cbfmsc/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace cbfmsc {

namespace fs = std::filesystem;

namespace {

// Heavy rank penalty; see README.
constexpr double kDefaultLambda = 100.0;
// k as a multiple of c.
constexpr int kDefaultKFactor = 5;

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index owns
// its output slot, so results do not depend on scheduling.
template <typename Body>
void parallel_for(int count, int jobs, Body body) {
  jobs = std::clamp(jobs, 1, std::max(count, 1));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

void validate_run_config(const RunConfig& config) {
  if (config.runs < 1) throw InvalidArgument("runs must be >= 1");
  if (config.kmeans_restarts < 1) throw InvalidArgument("k-means restarts must be >= 1");
  if (config.jobs < 1) throw InvalidArgument("jobs must be >= 1");
}

void check_k(Index k, int c, Index n) {
  if (k < c || k >= n) {
    throw InvalidArgument("k = " + std::to_string(k) + " outside [c, n) = [" + std::to_string(c) +
                          ", " + std::to_string(n) + ")");
  }
}

const Labels& require_labels(const MultiViewDataset& ds) {
  if (!ds.labels) {
    throw InvalidArgument("dataset '" + ds.name + "' has no ground-truth labels; metrics need them");
  }
  return *ds.labels;
}

}  // namespace

Method parse_method(const std::string& text) {
  if (text == "cbf-msc") return Method::CbfMsc;
  if (text == "lrr-bsv") return Method::LrrBsv;
  throw InvalidArgument("unknown method '" + text + "' (expected cbf-msc or lrr-bsv)");
}

std::string to_string(Method m) { return m == Method::CbfMsc ? "cbf-msc" : "lrr-bsv"; }

SolverConfig<double> RunConfig::default_solver_config() {
  SolverConfig<double> s;
  s.lambda = kDefaultLambda;
  s.k = 0;
  return s;
}

Index default_k(int c, Index n) {
  if (c < 1 || n <= c) throw InvalidArgument("default_k: need 1 <= c < n");
  Index k = static_cast<Index>(kDefaultKFactor) * c;
  while (k >= n) k -= c;
  return k;
}

std::vector<Index> default_k_grid(int c, Index n) {
  if (c < 1) throw InvalidArgument("default_k_grid: need c >= 1");
  std::vector<Index> grid;
  for (Index k = c; k < n; k += c) grid.push_back(k);
  return grid;
}

std::vector<RunRecord> run_once(const MultiViewDataset& ds, Method method,
                                const SolverConfig<double>& solver, int run, std::uint64_t seed,
                                int kmeans_restarts) {
  const Labels& truth = require_labels(ds);
  SolverConfig<double> config = solver;
  config.seed = seed;

  std::vector<RunRecord> records;
  auto score = [&](const Matrix& z, int view, bool converged, int iterations) {
    RunRecord r;
    r.run = run;
    r.seed = seed;
    r.view = view;
    r.converged = converged;
    r.iterations = iterations;
    const auto labels = spectral_cluster(build_affinity(z), ds.clusters, seed, kmeans_restarts);
    r.metrics = evaluate(labels, truth);
    records.push_back(r);
  };

  if (method == Method::CbfMsc) {
    const auto result = solve(ds.data, config);
    score(result.Z, -1, result.converged, result.iterations);
  } else {
    for (Index v = 0; v < ds.data.view_count(); ++v) {
      const auto result = lrr_solve(ds.data.views[v], config.lambda, config);
      score(result.Z, static_cast<int>(v), result.converged, result.iterations);
    }
  }
  return records;
}

RunSummary run_experiment(const MultiViewDataset& ds, const RunConfig& base) {
  validate_run_config(base);
  require_labels(ds);
  RunConfig config = base;
  if (config.solver.k == 0) config.solver.k = default_k(ds.clusters, ds.samples());
  check_k(config.solver.k, ds.clusters, ds.samples());
  config.solver.validate(ds.samples());

  std::vector<std::vector<RunRecord>> per_run(static_cast<std::size_t>(config.runs));
  parallel_for(config.runs, config.jobs, [&](int run) {
    per_run[static_cast<std::size_t>(run)] =
        run_once(ds, config.method, config.solver, run,
                 config.solver.seed + static_cast<std::uint64_t>(run), config.kmeans_restarts);
  });

  RunSummary summary;
  for (auto& records : per_run) {
    summary.records.insert(summary.records.end(), records.begin(), records.end());
  }

  if (config.method == Method::CbfMsc) {
    std::vector<MetricValues> values;
    for (const auto& r : summary.records) values.push_back(r.metrics);
    summary.report = aggregate(values);
    return summary;
  }

  // Best single view: aggregate each view, then keep the best mean per metric.
  std::vector<MetricsReport> per_view;
  for (Index v = 0; v < ds.data.view_count(); ++v) {
    std::vector<MetricValues> values;
    for (const auto& r : summary.records) {
      if (r.view == v) values.push_back(r.metrics);
    }
    per_view.push_back(aggregate(values));
  }
  summary.report.runs = static_cast<std::size_t>(config.runs);
  for (std::size_t m = 0; m < kAllMetrics.size(); ++m) {
    const Metric metric = kAllMetrics[m];
    std::size_t best = 0;
    for (std::size_t v = 1; v < per_view.size(); ++v) {
      const double candidate = per_view[v].get(metric).mean;
      const double current = per_view[best].get(metric).mean;
      if (higher_is_better(metric) ? candidate > current : candidate < current) best = v;
    }
    summary.chosen_view[m] = static_cast<int>(best);
    const MetricSummary chosen = per_view[best].get(metric);
    switch (metric) {
      case Metric::Nmi: summary.report.nmi = chosen; break;
      case Metric::Acc: summary.report.acc = chosen; break;
      case Metric::FScore: summary.report.f_score = chosen; break;
      case Metric::Avg: summary.report.avg = chosen; break;
      case Metric::Precision: summary.report.precision = chosen; break;
    }
  }
  return summary;
}

MultiViewDataset prepare_dataset(const RunConfig& config, SolverConfig<double>& resolved) {
  auto ds = normalize_dataset(load_dataset(config.dataset), config.normalization);
  resolved = config.solver;
  if (resolved.k == 0) resolved.k = default_k(ds.clusters, ds.samples());
  return ds;
}

std::string report_csv(const RunSummary& summary) {
  std::string out = "metric,mean,std\n";
  for (const Metric m : kAllMetrics) {
    const auto& s = summary.report.get(m);
    out += std::string(metric_name(m)) + "," + format_real(s.mean) + "," + format_real(s.std) + "\n";
  }
  return out;
}

std::string runs_csv(const RunSummary& summary) {
  std::string out = "run,seed,view,converged,iterations";
  for (const Metric m : kAllMetrics) out += "," + std::string(metric_name(m));
  out += "\n";
  for (const auto& r : summary.records) {
    out += std::to_string(r.run) + "," + std::to_string(r.seed) + "," +
           (r.view < 0 ? std::string("all") : std::to_string(r.view)) + "," +
           (r.converged ? "1" : "0") + "," + std::to_string(r.iterations);
    for (const Metric m : kAllMetrics) out += "," + format_real(r.metrics.get(m));
    out += "\n";
  }
  return out;
}

RunSummary cmd_run(const RunConfig& config) {
  RunConfig resolved = config;
  const auto ds = prepare_dataset(config, resolved.solver);
  auto summary = run_experiment(ds, resolved);
  write_text(config.out_dir / "report.csv", report_csv(summary));
  write_text(config.out_dir / "runs.csv", runs_csv(summary));
  return summary;
}

fs::path cmd_synth(const SynthParams& params, const fs::path& out_dir) {
  return write_dataset(synth_multiview(params), out_dir);
}

SolverResult<double> cmd_convergence(const RunConfig& config) {
  if (config.method != Method::CbfMsc) {
    throw InvalidArgument("convergence curves are only defined for cbf-msc");
  }
  SolverConfig<double> solver;
  const auto ds = prepare_dataset(config, solver);
  check_k(solver.k, ds.clusters, ds.samples());
  const auto result = solve(ds.data, solver);

  std::string out = "iteration,X_conv,Z_conv,V_conv\n";
  for (std::size_t i = 0; i < result.residual_history.size(); ++i) {
    const auto& r = result.residual_history[i];
    out += std::to_string(i + 1) + "," + format_real(r.x_conv) + "," + format_real(r.z_conv) + "," +
           format_real(r.v_conv) + "\n";
  }
  write_text(config.out_dir / "convergence.csv", out);
  return result;
}

std::vector<SweepCell> cmd_sweep(const RunConfig& config, const std::vector<double>& lambdas,
                                 std::vector<Index> ks) {
  if (lambdas.empty()) throw InvalidArgument("sweep: lambda grid is empty");
  SolverConfig<double> base;
  const auto ds = prepare_dataset(config, base);
  if (ks.empty()) ks = default_k_grid(ds.clusters, ds.samples());
  for (const double l : lambdas) {
    if (!(l > 0.0)) throw InvalidArgument("sweep: lambda values must be positive");
  }
  for (const Index k : ks) check_k(k, ds.clusters, ds.samples());

  std::vector<SweepCell> cells;
  for (const double l : lambdas) {
    for (const Index k : ks) cells.push_back({l, k, {}});
  }
  // Parallelism goes to the runs inside each cell; cells stay in grid order.
  for (auto& cell : cells) {
    RunConfig cell_config = config;
    cell_config.solver = base;
    cell_config.solver.lambda = cell.lambda;
    cell_config.solver.k = cell.k;
    cell.report = run_experiment(ds, cell_config).report;
  }

  std::string out = "lambda,k,metric,mean,std\n";
  for (const auto& cell : cells) {
    for (const Metric m : kAllMetrics) {
      const auto& s = cell.report.get(m);
      out += format_real(cell.lambda) + "," + std::to_string(cell.k) + "," +
             std::string(metric_name(m)) + "," + format_real(s.mean) + "," + format_real(s.std) + "\n";
    }
  }
  write_text(config.out_dir / "sweep.csv", out);
  return cells;
}

}  // namespace cbfmsc
