#pragma once

// Experiment harness behind the command-line tool: repeated randomized runs,
// metric reports, convergence curves and (lambda, k) sweeps. Every function
// that writes files puts them under RunConfig::out_dir and produces the same
// bytes for the same base seed regardless of RunConfig::jobs.

#include "cbfmsc/data.hpp"
#include "cbfmsc/metrics.hpp"
#include "cbfmsc/solver.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cbfmsc {

enum class Method { CbfMsc, LrrBsv };

Method parse_method(const std::string& text);
std::string to_string(Method m);

struct RunConfig {
  std::filesystem::path dataset;
  Method method = Method::CbfMsc;
  // k = 0 selects default_k(c, n).
  SolverConfig<double> solver = default_solver_config();
  int runs = 30;
  std::filesystem::path out_dir = "out";
  Normalization normalization = Normalization::UnitColumn;
  int kmeans_restarts = 20;
  int jobs = 1;

  static SolverConfig<double> default_solver_config();
};

/// 5c, lowered to the largest multiple of c below n when necessary.
Index default_k(int c, Index n);

/// {c, 2c, 3c, ...} restricted to k < n.
std::vector<Index> default_k_grid(int c, Index n);

/// One scored clustering of one run. For LRR-BSV there is one per view;
/// for CBF-MSC view is -1.
struct RunRecord {
  int run = 0;
  std::uint64_t seed = 0;
  int view = -1;
  bool converged = false;
  int iterations = 0;
  MetricValues metrics;
};

struct RunSummary {
  MetricsReport report;
  std::vector<RunRecord> records;
  // For LRR-BSV, the view whose mean was reported for each metric (in
  // kAllMetrics order); -1 for CBF-MSC.
  std::array<int, 5> chosen_view{-1, -1, -1, -1, -1};
};

/// Cluster one dataset once with the given per-run seed. The dataset must
/// carry labels and already be normalized.
std::vector<RunRecord> run_once(const MultiViewDataset& dataset, Method method,
                                const SolverConfig<double>& solver, int run, std::uint64_t seed,
                                int kmeans_restarts);

/// `runs` repetitions with seeds solver.seed + run index; no file output.
/// solver.k = 0 is resolved to default_k.
RunSummary run_experiment(const MultiViewDataset& dataset, const RunConfig& config);

/// Loads, normalizes and resolves k against the dataset.
MultiViewDataset prepare_dataset(const RunConfig& config, SolverConfig<double>& resolved);

std::string report_csv(const RunSummary& summary);
std::string runs_csv(const RunSummary& summary);

/// Writes report.csv and runs.csv.
RunSummary cmd_run(const RunConfig& config);

/// Writes a dataset directory; returns the manifest path.
std::filesystem::path cmd_synth(const SynthParams& params, const std::filesystem::path& out_dir);

/// One CBF-MSC solve with the base seed; writes convergence.csv with columns
/// iteration,X_conv,Z_conv,V_conv.
SolverResult<double> cmd_convergence(const RunConfig& config);

struct SweepCell {
  double lambda = 0.0;
  Index k = 0;
  MetricsReport report;
};

/// Cross product of the grids, each cell scored like cmd_run. An empty k
/// grid means default_k_grid. Writes sweep.csv with columns
/// lambda,k,metric,mean,std.
std::vector<SweepCell> cmd_sweep(const RunConfig& config, const std::vector<double>& lambdas,
                                 std::vector<Index> ks);

}  // namespace cbfmsc
