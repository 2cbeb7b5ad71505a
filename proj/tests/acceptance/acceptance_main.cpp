// Acceptance suite: one criterion per --criterion flag, each self-contained
// and printing a single PASS/FAIL line (plus detail lines prefixed with two
// spaces). Exit code 0 iff every requested criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "dslp/baselines.hpp"
#include "dslp/estimator.hpp"
#include "dslp/harness.hpp"
#include "dslp/metrics.hpp"

using namespace dslp;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

LoopConfig benchmark_loop(const ExperimentConfig& config, size_t length,
                          std::uint64_t stream) {
  LoopConfig loop;
  loop.plant = config.plant;
  loop.controller = config.controller;
  loop.noise_filter = config.noise_filter;
  loop.r1 = Signal::zeros(length, "r1");
  Signal r2 = prbs_generate(config.prbs_order, config.prbs_amplitude,
                            static_cast<int>((length + 510) / 511));
  r2.samples.resize(length);
  loop.r2 = std::move(r2);
  loop.sigma = config.sigma;
  loop.rng = RngStream{config.base_seed, stream};
  return loop;
}

double max_rel_error(const FrequencyResponse& ghat, const RationalTF& g) {
  double worst = 0.0;
  for (size_t i = 0; i < ghat.size(); ++i) {
    const Complex truth = tf_eval(g, std::polar(1.0, ghat.omegas[i]));
    worst = std::max(worst, std::abs(ghat.values[i](0, 0) - truth) / std::abs(truth));
  }
  return worst;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion1() {
  const auto start = Clock::now();
  Outcome out;
  const ExperimentConfig config = preset("benchmark");
  const StateSpaceModel k = tf_to_ss(config.controller);
  const int horizon = 20;

  const FirParams params = true_dual_params(config.plant, k.A, k.B, k.C, horizon);

  // Independent route: long division of L_k = z^2/(z-0.3)^2 via the
  // difference-equation simulator on a unit impulse.
  const RationalTF lk{Polynomial{0.0, 0.0, 1.0}, Polynomial{0.09, -0.6, 1.0}};
  std::vector<double> impulse(horizon + 1, 0.0);
  impulse[0] = 1.0;
  const std::vector<double> division = tf_simulate(lk, impulse);

  double worst = 0.0;
  for (int t = 0; t <= horizon; ++t) {
    const double closed_form = (t + 1) * std::pow(0.3, t);
    worst = std::max(worst, std::abs(params.L[t](0, 0) - closed_form));
    worst = std::max(worst, std::abs(params.L[t](0, 0) - division[static_cast<size_t>(t)]));
  }
  const double elapsed = seconds_since(start);
  out.pass = worst <= 1e-10 && elapsed < 1.0;
  out.summary = "true dual parameter taps match (t+1) 0.3^t (max dev " + fmt(worst) +
                ", " + fmt(elapsed) + " s)";
  return out;
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion2() {
  const auto start = Clock::now();
  Outcome out;
  ExperimentConfig config = preset("benchmark");
  config.sigma = 0.0;
  const LoopDataset ds = simulate_loop(benchmark_loop(config, 5110, 0));
  const StateSpaceModel k = tf_to_ss(config.controller);
  const std::vector<double> grid = freq_grid(512);

  const DualSlsEstimate est15 = estimate_dual_params(ds, k, 15);
  const double err15 = max_rel_error(recover_plant_freqresp(est15, grid), config.plant);
  const DualSlsEstimate est40 = estimate_dual_params(ds, k, 40);
  const double err40 = max_rel_error(recover_plant_freqresp(est40, grid), config.plant);

  const double elapsed = seconds_since(start);
  out.pass = err15 <= 1e-4 && err40 <= 1e-8 && elapsed < 10.0;
  out.summary = "noiseless recovery: T=15 max rel err " + fmt(err15) +
                " (<= 1e-4), T=40 " + fmt(err40) + " (<= 1e-8), " + fmt(elapsed) + " s";
  return out;
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3() {
  const auto start = Clock::now();
  Outcome out;
  const ExperimentConfig config = preset("benchmark");
  const StateSpaceModel k = tf_to_ss(config.controller);

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const LoopDataset ds =
        simulate_loop(benchmark_loop(config, 5110, 2 * static_cast<std::uint64_t>(trial)));
    const DualSlsEstimate est = estimate_dual_params(ds, k, 15);
    const ResidualReport report = verify_params(est.params, k.A, k.B, k.C);
    worst = std::max(worst, report.max_abs);
  }
  const double elapsed = seconds_since(start);
  out.pass = worst <= 1e-8 && elapsed < 120.0;
  out.summary = "constraint enforcement over 100 noisy trials: max residual " +
                fmt(worst) + " (<= 1e-8), " + fmt(elapsed) + " s";
  return out;
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion4() {
  Outcome out;
  ExperimentConfig config = preset("benchmark");
  config.trials = 100;
  config.grid_size = 128;  // stability is what this criterion asserts
  config.threads = 0;
  const ResultsTable table = run_monte_carlo(config);

  int dslp_total = 0, dslp_stable = 0;
  int dy_total = 0, dy_stable = 0;        // stabilized nominals: zero, two_stage
  int dy_a_total = 0, dy_a_stable = 0;    // unstabilized nominal, reported only
  int cp_total = 0, cp_stable = 0;
  for (const TrialResult& row : table.rows) {
    if (row.method == Method::dslp) {
      ++dslp_total;
      dslp_stable += row.cl_stable;
    } else if (row.method == Method::dual_youla) {
      if (row.nominal == "g0a") {
        ++dy_a_total;
        dy_a_stable += row.cl_stable;
      } else {
        ++dy_total;
        dy_stable += row.cl_stable;
      }
    } else if (row.method == Method::coprime && row.ok) {
      ++cp_total;
      cp_stable += row.cl_stable;
    }
  }
  out.pass = dslp_total == 100 && dslp_stable == 100 && dy_total == 200 &&
             dy_stable == 200;
  out.summary = "stabilization guarantee: dslp " + std::to_string(dslp_stable) + "/" +
                std::to_string(dslp_total) + ", dual_youla (stabilized nominals) " +
                std::to_string(dy_stable) + "/" + std::to_string(dy_total);
  out.details.push_back(
      "dual_youla with the unstabilized paper nominal g0a (no guarantee applies): " +
      std::to_string(dy_a_stable) + "/" + std::to_string(dy_a_total) + " stable");
  out.details.push_back("coprime (recorded, no pass requirement): " +
                        std::to_string(cp_stable) + "/" + std::to_string(cp_total) +
                        " stable");
  return out;
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion5() {
  Outcome out;
  const ExperimentConfig config = preset("benchmark");
  const StateSpaceModel k = tf_to_ss(config.controller);
  const LoopDataset ds = simulate_loop(benchmark_loop(config, 5110, 2));
  const DualSlsEstimate reference = estimate_dual_params(ds, k, 15);

  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  double worst_l = 0.0, worst_r = 0.0, worst_cond = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd tbar(2, 2);
    do {
      tbar << entry(rng), entry(rng), entry(rng), entry(rng);
      tbar += 2.0 * Eigen::MatrixXd::Identity(2, 2);
    } while (std::abs(tbar.determinant()) < 0.5);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(tbar);
    worst_cond = std::max(
        worst_cond, svd.singularValues()(0) / svd.singularValues()(1));

    const StateSpaceModel k2 = transform_realization(k, tbar);
    const DualSlsEstimate moved = estimate_dual_params(ds, k2, 15);
    const FirParams mapped_back = expected_param_transform(moved.params, tbar);
    for (int t = 0; t <= 15; ++t) {
      worst_l = std::max(worst_l, (moved.params.L[t] - reference.params.L[t])
                                      .cwiseAbs()
                                      .maxCoeff());
      worst_r = std::max(
          worst_r,
          (mapped_back.R[t] - reference.params.R[t]).cwiseAbs().maxCoeff());
    }
  }
  out.pass = worst_l <= 1e-8 && worst_r <= 1e-6;
  out.summary = "realization invariance over 10 transforms: max |dL| " + fmt(worst_l) +
                " (<= 1e-8), max |dR| " + fmt(worst_r) + " (<= 1e-6), max cond " +
                fmt(worst_cond);
  return out;
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion6() {
  const auto start = Clock::now();
  Outcome out;
  ExperimentConfig config = preset("benchmark");
  config.trials = 100;
  config.grid_size = 5110;  // metric definition: n = length of r
  config.threads = 0;
  const ResultsTable table = run_monte_carlo(config);

  // Failed method rows (the coprime filter diverges for the unstabilized
  // nominal) count as +inf for the ordinal comparison.
  auto median_of = [&](Method m, const std::string& nominal, bool second_metric) {
    std::vector<double> values;
    for (const TrialResult& row : table.rows) {
      if (row.method != m) continue;
      if (m != Method::dslp && row.nominal != nominal) continue;
      const double v = second_metric ? row.err2 : row.err1;
      values.push_back(row.ok && std::isfinite(v)
                           ? v
                           : std::numeric_limits<double>::infinity());
    }
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  };

  bool pass = true;
  for (const bool second : {false, true}) {
    const char* metric = second ? "err2" : "err1";
    const double dslp_median = median_of(Method::dslp, "-", second);
    for (const std::string nominal : {"g0a", "zero"}) {
      const double dy = median_of(Method::dual_youla, nominal, second);
      const double cp = median_of(Method::coprime, nominal, second);
      const bool ok = dslp_median < dy && dslp_median < cp;
      pass = pass && ok;
      out.details.push_back(std::string(metric) + " medians, nominal " + nominal +
                            ": dslp " + fmt(dslp_median) + ", dual_youla " + fmt(dy) +
                            ", coprime " + fmt(cp) + (ok ? "" : "  <-- violated"));
    }
    const double dy_c = median_of(Method::dual_youla, "two_stage", second);
    const double cp_c = median_of(Method::coprime, "two_stage", second);
    const bool ok = dslp_median <= 1.05 * dy_c && dslp_median <= 1.05 * cp_c;
    pass = pass && ok;
    out.details.push_back(std::string(metric) + " medians, two-stage: dslp " +
                          fmt(dslp_median) + ", dual_youla " + fmt(dy_c) + ", coprime " +
                          fmt(cp_c) + (ok ? "" : "  <-- violated"));
  }
  const double elapsed = seconds_since(start);
  out.pass = pass && elapsed < 600.0;
  out.summary = "comparative medians over 100 trials (" + fmt(elapsed) + " s)";
  return out;
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion7() {
  Outcome out;
  ExperimentConfig config = preset("benchmark");
  config.trials = 50;
  config.methods = {Method::dslp};
  config.nominals.clear();
  config.grid_size = 512;  // fixed evaluation grid across lengths
  config.threads = 0;
  const std::vector<size_t> lengths{511, 1022, 2555, 5110, 10220};
  const std::vector<SweepRow> rows = convergence_sweep(config, lengths);

  std::vector<double> medians;
  for (size_t length : lengths)
    for (const SweepRow& row : rows)
      if (row.length == length && row.method == Method::dslp)
        medians.push_back(row.median_err1);

  bool pass = medians.size() == lengths.size() && medians.back() < medians.front();
  for (size_t i = 0; i + 1 < medians.size(); ++i)
    pass = pass && medians[i + 1] <= 1.10 * medians[i];
  out.pass = pass;
  std::string curve;
  for (size_t i = 0; i < medians.size(); ++i)
    curve += (i ? ", " : "") + std::to_string(lengths[i]) + ": " + fmt(medians[i]);
  out.summary = "convergence of median err1 over 50 trials (" + curve + ")";
  return out;
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion8() {
  Outcome out;
  ExperimentConfig config = preset("benchmark_proper");
  config.sigma = 0.0;
  const LoopDataset ds = simulate_loop(benchmark_loop(config, 5110, 0));
  const StateSpaceModel k = tf_to_ss(config.controller);
  const std::vector<double> grid = freq_grid(512);

  const DualSlsEstimate est15 = estimate_dual_params(ds, k, 15);
  const double err15 = max_rel_error(recover_plant_freqresp(est15, grid), config.plant);
  out.pass = err15 <= 1e-4;
  out.summary = "proper-controller noiseless recovery at T=15: max rel err " +
                fmt(err15) + " (bound 1e-4)";

  // Diagnostics: the loop with the proper controller has spectral radius
  // ~0.667, so the T=15 FIR truncation floor sits near 1e-2; longer
  // horizons recover accordingly.
  const StabilityCertificate loop =
      closed_loop_stable(tf_to_ss(config.plant), k);
  const DualSlsEstimate est40 = estimate_dual_params(ds, k, 40);
  const double err40 = max_rel_error(recover_plant_freqresp(est40, grid), config.plant);
  out.details.push_back("loop spectral radius " + fmt(loop.spectral_radius) +
                        "; rho^15 = " + fmt(std::pow(loop.spectral_radius, 15)) +
                        "; measured T=40 err " + fmt(err40));
  out.details.push_back("D_k = " + fmt(k.D(0, 0)) +
                        "; constraint residual " + fmt(est15.constraint_residual));
  return out;
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion9() {
  Outcome out;
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_real_distribution<double> mag(0.05, 0.9);
  std::uniform_real_distribution<double> phase(0.0, 3.14159265358979);

  auto random_stable_poly = [&](int degree) {
    std::vector<Complex> roots;
    while (static_cast<int>(roots.size()) < degree) {
      if (degree - static_cast<int>(roots.size()) >= 2 && rng() % 2 == 0) {
        const Complex r = std::polar(mag(rng), phase(rng));
        roots.push_back(r);
        roots.push_back(std::conj(r));
      } else {
        roots.push_back(Complex(coeff(rng) * 0.9, 0.0));
      }
    }
    return poly_from_roots(roots);
  };

  double worst = 0.0;
  int accepted = 0;
  while (accepted < 20) {
    const int ng = 1 + static_cast<int>(rng() % 4);
    const int nk = 1 + static_cast<int>(rng() % 3);
    std::vector<double> gnum(ng + 1), knum(nk);
    for (double& x : gnum) x = coeff(rng);
    for (double& x : knum) x = coeff(rng);
    const RationalTF g{Polynomial(std::move(gnum)), random_stable_poly(ng)};
    const RationalTF k{Polynomial(std::move(knum)), random_stable_poly(nk)};
    if (g.num.is_zero() || k.num.is_zero()) continue;

    LoopConfig loop;
    loop.plant = g;
    loop.controller = k;
    loop.noise_filter = RationalTF::constant(1.0);
    const size_t length = 400;
    loop.r1 = Signal::zeros(length, "r1");
    Signal r2 = prbs_generate(9, 1.0, 1);
    r2.samples.resize(length);
    loop.r2 = std::move(r2);
    loop.sigma = 0.5;
    loop.rng = RngStream{1000 + static_cast<std::uint64_t>(accepted), 0};
    if (!validate_loop(loop).ok) continue;
    ++accepted;

    const LoopDataset ds = simulate_loop(loop);

    // Independent route: per-sample state-space interconnection stepping.
    const StateSpaceModel g_ss = tf_to_ss(g);
    const StateSpaceModel k_ss = tf_to_ss(k);
    const StateSpaceModel s_ss = tf_to_ss(loop.noise_filter);
    Eigen::VectorXd xg = Eigen::VectorXd::Zero(g_ss.state_dim());
    Eigen::VectorXd xk = Eigen::VectorXd::Zero(k_ss.state_dim());
    for (size_t t = 0; t < length; ++t) {
      const double u = (k_ss.state_dim() > 0 ? (k_ss.C * xk)(0) : 0.0);  // K strictly proper
      const double ubar = u + ds.r2[t];
      const double se = s_ss.D(0, 0) * ds.e[t];
      const double y = (g_ss.state_dim() > 0 ? (g_ss.C * xg)(0) : 0.0) +
                       g_ss.D(0, 0) * ubar + se;
      xg = g_ss.A * xg + g_ss.B * ubar;
      if (k_ss.state_dim() > 0) xk = k_ss.A * xk + k_ss.B * y;
      worst = std::max(worst, std::abs(y - ds.y[t]));
      worst = std::max(worst, std::abs(ubar - ds.ubar[t]));
    }
  }
  out.pass = worst <= 1e-9;
  out.summary = "rational vs state-space simulation on 20 random stable loops: "
                "max per-sample deviation " + fmt(worst) + " (<= 1e-9)";
  return out;
}

// --------------------------------------------------------------- criterion 10

Outcome criterion10() {
  Outcome out;
  ExperimentConfig config = preset("benchmark");
  config.trials = 100;
  config.grid_size = 512;

  auto csv_without_wall_ms = [](const ResultsTable& table) {
    std::ostringstream text;
    text << TrialResult::csv_header() << '\n';
    for (const TrialResult& row : table.rows) {
      const std::string line = row.csv_row();
      text << line.substr(0, line.rfind(',')) << '\n';
    }
    return text.str();
  };

  config.threads = 1;
  const std::string serial = csv_without_wall_ms(run_monte_carlo(config));
  config.threads = 4;
  const std::string parallel = csv_without_wall_ms(run_monte_carlo(config));
  const std::string again = csv_without_wall_ms(run_monte_carlo(config));

  out.pass = serial == parallel && parallel == again;
  out.summary = std::string("byte-identical results CSV across runs and worker counts: ") +
                (out.pass ? "identical" : "DIFFER");
  return out;
}

} // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      only = std::atoi(argv[i + 1]);
  }

  using CriterionFn = Outcome (*)();
  const CriterionFn criteria[] = {criterion1, criterion2, criterion3, criterion4,
                                  criterion5, criterion6, criterion7, criterion8,
                                  criterion9, criterion10};
  bool all_pass = true;
  for (int i = 1; i <= 10; ++i) {
    if (only != 0 && only != i) continue;
    Outcome outcome;
    try {
      outcome = criteria[i - 1]();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.summary = std::string("exception: ") + e.what();
    }
    std::cout << "criterion " << i << ": " << (outcome.pass ? "PASS" : "FAIL") << " - "
              << outcome.summary << '\n';
    for (const std::string& detail : outcome.details)
      std::cout << "  " << detail << '\n';
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
