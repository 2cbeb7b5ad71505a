#include "dslp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "dslp/baselines.hpp"
#include "dslp/estimator.hpp"
#include "dslp/signals.hpp"

namespace dslp {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

LoopConfig make_loop_config(const ExperimentConfig& config, std::uint64_t stream) {
  const size_t length = config.dataset_length();
  const int period = (1 << config.prbs_order) - 1;
  const int periods_needed =
      static_cast<int>((length + static_cast<size_t>(period) - 1) / period);
  Signal r2 = prbs_generate(config.prbs_order, config.prbs_amplitude,
                            std::max(periods_needed, 1));
  r2.samples.resize(length);
  r2.name = "r2";

  LoopConfig loop;
  loop.plant = config.plant;
  loop.controller = config.controller;
  loop.noise_filter = config.noise_filter;
  loop.r1 = Signal::zeros(length, "r1");
  loop.r2 = std::move(r2);
  loop.sigma = config.sigma;
  loop.rng = RngStream{config.base_seed, stream};
  loop.r1_sign = config.r1_sign;
  return loop;
}

struct TrialContext {
  const ExperimentConfig& config;
  std::vector<double> grid;
  FrequencyResponse g_fr;
  FrequencyResponse k_fr;
  StateSpaceModel k_ss;
  CoprimeFactors k_factors;

  explicit TrialContext(const ExperimentConfig& cfg)
      : config(cfg),
        grid(freq_grid(cfg.grid_size)),
        g_fr(sample_freq_response(cfg.plant, grid)),
        k_fr(sample_freq_response(cfg.controller, grid)),
        k_ss(tf_to_ss(cfg.controller)),
        k_factors(coprime_factorize(cfg.controller, "controller")) {}
};

TrialResult base_row(int trial, const ExperimentConfig& config, Method method,
                     std::string nominal, std::uint64_t hash) {
  TrialResult row;
  row.trial = trial;
  row.seed = config.base_seed;
  row.dataset_hash = hash;
  row.method = method;
  row.nominal = std::move(nominal);
  return row;
}

void fill_metrics(TrialResult& row, const TrialContext& ctx,
                  const FrequencyResponse& ghat_fr, const StateSpaceModel& ghat_ss) {
  row.err1 = err1(ctx.g_fr, ghat_fr);
  row.err2 = err2(ctx.g_fr, ghat_fr, ctx.k_fr);
  const StabilityCertificate cert = closed_loop_stable(ghat_ss, ctx.k_ss);
  row.cl_stable = cert.stable;
  row.spectral_radius = cert.spectral_radius;
}

void fail_row(TrialResult& row, const std::exception& e) {
  row.ok = false;
  row.error = e.what();
  row.err1 = std::numeric_limits<double>::quiet_NaN();
  row.err2 = std::numeric_limits<double>::quiet_NaN();
  row.cl_stable = false;
}

TrialResult run_dslp(const TrialContext& ctx, int trial, const LoopDataset& dataset) {
  TrialResult row = base_row(trial, ctx.config, Method::dslp, "-", dataset_hash(dataset));
  const auto start = Clock::now();
  try {
    const DualSlsEstimate estimate =
        estimate_dual_params(dataset, ctx.k_ss, ctx.config.horizon);
    row.fit_residual = estimate.fit_residual;
    row.constraint_residual = estimate.constraint_residual;
    const FrequencyResponse ghat = recover_plant_freqresp(estimate, ctx.grid);
    fill_metrics(row, ctx, ghat, realize_plant_ss(estimate));
  } catch (const std::exception& e) {
    fail_row(row, e);
  }
  row.wall_ms = ms_since(start);
  return row;
}

TrialResult run_dual_youla(const TrialContext& ctx, int trial, const LoopDataset& dataset,
                           const CoprimeFactors& g0_factors, const std::string& label) {
  TrialResult row =
      base_row(trial, ctx.config, Method::dual_youla, label, dataset_hash(dataset));
  const auto start = Clock::now();
  try {
    const BaselineEstimate estimate =
        dual_youla_estimate(dataset, ctx.k_factors, g0_factors, ctx.config.horizon,
                            /*require_stabilized_nominal=*/false);
    row.fit_residual = estimate.fit_residual;
    const FrequencyResponse ghat = sample_freq_response(estimate.plant, ctx.grid);
    fill_metrics(row, ctx, ghat, tf_to_ss(estimate.plant));
  } catch (const std::exception& e) {
    fail_row(row, e);
  }
  row.wall_ms = ms_since(start);
  return row;
}

TrialResult run_coprime(const TrialContext& ctx, int trial, const LoopDataset& dataset,
                        const CoprimeFactors& g0_factors, const std::string& label) {
  TrialResult row =
      base_row(trial, ctx.config, Method::coprime, label, dataset_hash(dataset));
  const auto start = Clock::now();
  try {
    const BaselineEstimate estimate =
        coprime_estimate(dataset, ctx.config.controller, g0_factors, ctx.config.horizon);
    row.fit_residual = estimate.fit_residual;
    const FrequencyResponse ghat = sample_freq_response(estimate.plant, ctx.grid);
    fill_metrics(row, ctx, ghat, tf_to_ss(estimate.plant));
  } catch (const std::exception& e) {
    fail_row(row, e);
  }
  row.wall_ms = ms_since(start);
  return row;
}

std::vector<TrialResult> run_trial_impl(const TrialContext& ctx, int trial) {
  const ExperimentConfig& config = ctx.config;
  const bool want_dslp =
      std::count(config.methods.begin(), config.methods.end(), Method::dslp) > 0;
  const bool want_dy =
      std::count(config.methods.begin(), config.methods.end(), Method::dual_youla) > 0;
  const bool want_cp =
      std::count(config.methods.begin(), config.methods.end(), Method::coprime) > 0;

  const LoopDataset dataset =
      simulate_loop(make_loop_config(config, 2 * static_cast<std::uint64_t>(trial)));

  std::vector<TrialResult> rows;
  if (want_dslp) rows.push_back(run_dslp(ctx, trial, dataset));
  if (!want_dy && !want_cp) return rows;

  const CoprimeFactors zero_factors = coprime_factorize(RationalTF::zero(), "plant");
  std::optional<LoopDataset> second_dataset;

  for (const NominalSpec& spec : config.nominals) {
    CoprimeFactors g0_factors = zero_factors;
    const LoopDataset* data = &dataset;
    try {
      switch (spec.kind) {
        case NominalSpec::Kind::zero:
          break;
        case NominalSpec::Kind::expr:
          g0_factors = coprime_factorize(spec.plant, "plant");
          break;
        case NominalSpec::Kind::two_stage: {
          // Stage 1: dual-Youla with G0 = 0 on the trial dataset; its
          // estimate becomes the nominal for a second pass on fresh data.
          const BaselineEstimate stage1 = dual_youla_estimate(
              dataset, ctx.k_factors, zero_factors, config.horizon);
          g0_factors = coprime_factorize(stage1.plant, "plant");
          if (!second_dataset)
            second_dataset = simulate_loop(
                make_loop_config(config, 2 * static_cast<std::uint64_t>(trial) + 1));
          data = &*second_dataset;
          break;
        }
      }
    } catch (const std::exception& e) {
      // Nominal construction failed: emit failed rows for the methods that
      // would have used it.
      for (Method m : {Method::dual_youla, Method::coprime}) {
        if ((m == Method::dual_youla && !want_dy) || (m == Method::coprime && !want_cp))
          continue;
        TrialResult row = base_row(trial, config, m, spec.label, dataset_hash(dataset));
        fail_row(row, e);
        rows.push_back(std::move(row));
      }
      continue;
    }
    if (want_dy) rows.push_back(run_dual_youla(ctx, trial, *data, g0_factors, spec.label));
    if (want_cp) rows.push_back(run_coprime(ctx, trial, *data, g0_factors, spec.label));
  }
  return rows;
}

} // namespace

std::string TrialResult::csv_header() {
  return "trial,seed,dataset_hash,method,nominal,err1,err2,cl_stable,fit_residual,"
         "constraint_residual,wall_ms";
}

std::string TrialResult::csv_row() const {
  std::ostringstream out;
  out << trial << ',' << seed << ',' << dataset_hash << ',' << method_name(method)
      << ',' << nominal << ',' << format_double(err1) << ',' << format_double(err2)
      << ',' << (cl_stable ? "true" : "false") << ',' << format_double(fit_residual)
      << ',' << format_double(constraint_residual) << ',' << format_double(wall_ms);
  return out.str();
}

void ResultsTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("ResultsTable::write_csv: cannot open " + path);
  out << TrialResult::csv_header() << '\n';
  for (const TrialResult& row : rows) out << row.csv_row() << '\n';
}

ResultsTable read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedResults("read_results_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != TrialResult::csv_header())
    throw MalformedResults("read_results_csv: unexpected header in " + path);
  ResultsTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row_in(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row_in, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11)
      throw MalformedResults("read_results_csv: malformed row in " + path);
    TrialResult row;
    row.trial = std::stoi(cells[0]);
    row.seed = std::stoull(cells[1]);
    row.dataset_hash = std::stoull(cells[2]);
    if (cells[3] == "dslp") row.method = Method::dslp;
    else if (cells[3] == "dual_youla") row.method = Method::dual_youla;
    else if (cells[3] == "coprime") row.method = Method::coprime;
    else throw MalformedResults("read_results_csv: unknown method " + cells[3]);
    row.nominal = cells[4];
    row.err1 = std::stod(cells[5]);
    row.err2 = std::stod(cells[6]);
    row.cl_stable = cells[7] == "true";
    row.fit_residual = std::stod(cells[8]);
    row.constraint_residual = std::stod(cells[9]);
    row.wall_ms = std::stod(cells[10]);
    row.ok = std::isfinite(row.err1);
    if (!row.ok) ++table.failed_rows;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<TrialResult> run_trial(const ExperimentConfig& config, int trial) {
  const TrialContext ctx(config);
  return run_trial_impl(ctx, trial);
}

ResultsTable run_monte_carlo(const ExperimentConfig& config) {
  // Fail fast on an unstable or ill-posed loop before spinning up workers.
  {
    const LoopConfig probe = make_loop_config(config, 0);
    const LoopReport report = validate_loop(probe);
    if (!report.well_posed) throw IllPosedLoop("run_monte_carlo: loop not well posed");
    if (!report.ok) {
      std::ostringstream msg;
      msg << "run_monte_carlo: closed loop unstable (max pole modulus "
          << report.max_modulus << ")";
      throw UnstableLoop(msg.str());
    }
    if (config.dataset_length() <= static_cast<size_t>(config.horizon))
      throw LengthTooShort("run_monte_carlo: dataset length <= horizon");
  }

  const TrialContext ctx(config);
  std::vector<std::vector<TrialResult>> per_trial(config.trials);
  std::atomic<int> next{0};

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers =
      std::min<unsigned>(config.threads > 0 ? static_cast<unsigned>(config.threads) : hw,
                         static_cast<unsigned>(config.trials));
  auto work = [&] {
    for (int i = next.fetch_add(1); i < config.trials; i = next.fetch_add(1)) {
      try {
        per_trial[static_cast<size_t>(i)] = run_trial_impl(ctx, i);
      } catch (const std::exception& e) {
        // A whole-trial abort (e.g. simulation failure) becomes failed rows;
        // each worker only touches its own trial slot.
        for (Method m : ctx.config.methods) {
          TrialResult row = base_row(i, ctx.config, m, "-", 0);
          row.ok = false;
          row.error = e.what();
          row.err1 = std::numeric_limits<double>::quiet_NaN();
          row.err2 = std::numeric_limits<double>::quiet_NaN();
          per_trial[static_cast<size_t>(i)].push_back(std::move(row));
        }
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  ResultsTable table;
  for (auto& rows : per_trial)
    for (TrialResult& row : rows) table.rows.push_back(std::move(row));
  std::sort(table.rows.begin(), table.rows.end(),
            [](const TrialResult& a, const TrialResult& b) {
              if (a.trial != b.trial) return a.trial < b.trial;
              const std::string am = method_name(a.method), bm = method_name(b.method);
              if (am != bm) return am < bm;
              return a.nominal < b.nominal;
            });
  for (const TrialResult& row : table.rows)
    if (!row.ok) ++table.failed_rows;
  return table;
}

std::vector<SweepRow> convergence_sweep(const ExperimentConfig& config,
                                        const std::vector<size_t>& lengths) {
  for (size_t i = 1; i < lengths.size(); ++i)
    if (lengths[i] <= lengths[i - 1])
      throw Error("convergence_sweep: lengths must be ascending");
  std::vector<SweepRow> out;
  for (size_t length : lengths) {
    if (length <= static_cast<size_t>(config.horizon))
      throw LengthTooShort("convergence_sweep: length " + std::to_string(length) +
                           " <= horizon");
    ExperimentConfig cfg = config;
    cfg.length_override = length;
    const ResultsTable table = run_monte_carlo(cfg);
    const SummaryStats summary = summarize(table);
    for (const SummaryEntry& entry : summary.entries) {
      SweepRow row;
      row.length = length;
      row.method = entry.method;
      row.nominal = entry.nominal;
      row.median_err1 = entry.err1.median;
      row.trials = entry.err1.count;
      out.push_back(std::move(row));
    }
  }
  return out;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_sweep_csv: cannot open " + path);
  out << "length,method,nominal,median_err1,trials\n";
  for (const SweepRow& row : rows)
    out << row.length << ',' << method_name(row.method) << ',' << row.nominal << ','
        << format_double(row.median_err1) << ',' << row.trials << '\n';
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw Error("quantile_type7: empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

SummaryStats summarize(const ResultsTable& results) {
  std::map<std::pair<std::string, std::string>, SummaryEntry> groups;
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>>
      samples;
  for (const TrialResult& row : results.rows) {
    const auto key = std::make_pair(method_name(row.method), row.nominal);
    SummaryEntry& entry = groups[key];
    entry.method = row.method;
    entry.nominal = row.nominal;
    if (row.ok && std::isfinite(row.err1) && std::isfinite(row.err2)) {
      samples[key].first.push_back(row.err1);
      samples[key].second.push_back(row.err2);
      if (row.cl_stable) ++entry.stable_count;
    } else {
      ++entry.failed_count;
    }
  }
  auto five = [](const std::vector<double>& v) {
    FiveNumber f;
    if (v.empty()) return f;
    f.min = quantile_type7(v, 0.0);
    f.q1 = quantile_type7(v, 0.25);
    f.median = quantile_type7(v, 0.5);
    f.q3 = quantile_type7(v, 0.75);
    f.max = quantile_type7(v, 1.0);
    f.count = static_cast<int>(v.size());
    return f;
  };
  SummaryStats stats;
  for (auto& [key, entry] : groups) {
    entry.err1 = five(samples[key].first);
    entry.err2 = five(samples[key].second);
    stats.entries.push_back(entry);
  }
  return stats;
}

SummaryStats summarize_csv(const std::string& results_path) {
  return summarize(read_results_csv(results_path));
}

void write_summary_csv(const SummaryStats& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_summary_csv: cannot open " + path);
  out << "method,nominal,metric,min,q1,median,q3,max,count,stable_count,failed_count\n";
  for (const SummaryEntry& entry : summary.entries) {
    for (const auto& [metric, five] :
         {std::make_pair("err1", entry.err1), std::make_pair("err2", entry.err2)}) {
      out << method_name(entry.method) << ',' << entry.nominal << ',' << metric << ','
          << format_double(five.min) << ',' << format_double(five.q1) << ','
          << format_double(five.median) << ',' << format_double(five.q3) << ','
          << format_double(five.max) << ',' << five.count << ',' << entry.stable_count
          << ',' << entry.failed_count << '\n';
    }
  }
}

void write_boxplot_data(const SummaryStats& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_boxplot_data: cannot open " + path);
  out << "# label err1_min err1_q1 err1_median err1_q3 err1_max"
         " err2_min err2_q1 err2_median err2_q3 err2_max\n";
  for (const SummaryEntry& entry : summary.entries) {
    out << method_name(entry.method) << ':' << entry.nominal << ' '
        << format_double(entry.err1.min) << ' ' << format_double(entry.err1.q1) << ' '
        << format_double(entry.err1.median) << ' ' << format_double(entry.err1.q3) << ' '
        << format_double(entry.err1.max) << ' ' << format_double(entry.err2.min) << ' '
        << format_double(entry.err2.q1) << ' ' << format_double(entry.err2.median) << ' '
        << format_double(entry.err2.q3) << ' ' << format_double(entry.err2.max) << '\n';
  }
}

} // namespace dslp
