#pragma once

// Monte Carlo orchestration across methods and nominal-plant choices,
// convergence sweeps, summary statistics, and result persistence.
//
// Determinism contract: (config, base seed) fully determine every output
// byte except the wall-time column, regardless of worker count. Each trial
// derives its own noise streams (stream ids 2*trial and 2*trial + 1; the
// second one feeds the fresh dataset of the two-stage nominal).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dslp/config.hpp"
#include "dslp/loop_sim.hpp"
#include "dslp/metrics.hpp"

namespace dslp {

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t dataset_hash = 0;
  Method method = Method::dslp;
  std::string nominal;           // "-" for dslp
  double err1 = 0.0;
  double err2 = 0.0;
  bool cl_stable = false;
  double spectral_radius = 0.0;  // in-memory only, not a CSV column
  double fit_residual = 0.0;
  double constraint_residual = 0.0;  // dslp only; 0 otherwise
  double wall_ms = 0.0;
  bool ok = true;
  std::string error;             // in-memory only

  static std::string csv_header();
  std::string csv_row() const;
};

struct ResultsTable {
  std::vector<TrialResult> rows;
  int failed_rows = 0;

  void write_csv(const std::string& path) const;
};

ResultsTable read_results_csv(const std::string& path);

/// Runs one trial: simulates the dataset(s), runs every configured
/// method/nominal combination, computes metrics on the configured grid.
/// Method-level failures become flagged rows, never exceptions.
std::vector<TrialResult> run_trial(const ExperimentConfig& config, int trial);

/// Executes all trials (parallel allowed), rows sorted by
/// (trial, method, nominal).
ResultsTable run_monte_carlo(const ExperimentConfig& config);

struct SweepRow {
  size_t length = 0;
  Method method = Method::dslp;
  std::string nominal;
  double median_err1 = 0.0;
  int trials = 0;
};

/// For each length, truncates/extends the PRBS schedule and repeats the
/// Monte Carlo, recording the median err1 per method.
std::vector<SweepRow> convergence_sweep(const ExperimentConfig& config,
                                        const std::vector<size_t>& lengths);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

struct FiveNumber {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  int count = 0;
};

struct SummaryEntry {
  Method method = Method::dslp;
  std::string nominal;
  FiveNumber err1;
  FiveNumber err2;
  int stable_count = 0;
  int failed_count = 0;
};

struct SummaryStats {
  std::vector<SummaryEntry> entries;
};

/// Type-7 (linear interpolation) quantile of already-collected values.
double quantile_type7(std::vector<double> values, double p);

/// Five-number summaries per (method, nominal); failed rows are counted and
/// excluded from the quantiles.
SummaryStats summarize(const ResultsTable& results);
SummaryStats summarize_csv(const std::string& results_path);
void write_summary_csv(const SummaryStats& summary, const std::string& path);
/// Gnuplot-ready boxplot table (one row per method/nominal).
void write_boxplot_data(const SummaryStats& summary, const std::string& path);

} // namespace dslp
