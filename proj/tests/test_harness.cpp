#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <set>

#include "dslp/harness.hpp"

using namespace dslp;

namespace {

ExperimentConfig small_benchmark(int trials) {
  ExperimentConfig config = preset("benchmark");
  config.trials = trials;
  config.base_seed = 7;
  config.grid_size = 128;
  config.prbs_periods = 2;  // 1022 samples keeps the suite fast
  config.threads = 1;
  return config;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string strip_wall_ms(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto last_comma = line.rfind(',');
    out << line.substr(0, last_comma) << '\n';
  }
  return out.str();
}

} // namespace

TEST_CASE("toml subset parser") {
  const std::string text = R"(
# comment
[plant]
num = [0.0, 0.0, 1.0]   # ascending
den = [0.89, -1.6, 1.0]

[estimation]
horizon = 15
methods = ["dslp", "dual_youla"]
flag = true
name = "bench # not a comment"
)";
  const auto tables = toml_lite::parse(text);
  REQUIRE(tables.count("plant"));
  CHECK(tables.at("plant").numbers("num") == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(tables.at("estimation").integer("horizon") == 15);
  CHECK(tables.at("estimation").strings("methods") ==
        std::vector<std::string>{"dslp", "dual_youla"});
  CHECK(tables.at("estimation").str("name") == "bench # not a comment");

  CHECK_THROWS_AS(toml_lite::parse("key value-without-equals"), ConfigError);
  CHECK_THROWS_AS(toml_lite::parse("[unterminated"), ConfigError);
}

TEST_CASE("config round trip via TOML") {
  const ExperimentConfig config = small_benchmark(3);
  const std::string toml = config_to_toml(config);
  const ExperimentConfig back = parse_config(toml);
  CHECK(back.plant.num.coeffs() == config.plant.num.coeffs());
  CHECK(back.controller.den.coeffs() == config.controller.den.coeffs());
  CHECK(back.trials == 3);
  CHECK(back.horizon == 15);
  CHECK(back.nominals.size() == 3);
  CHECK(back.nominals[0].label == "g0a");
  CHECK(back.nominals[0].kind == NominalSpec::Kind::expr);
  CHECK(back.nominals[1].kind == NominalSpec::Kind::zero);
  CHECK(back.nominals[2].kind == NominalSpec::Kind::two_stage);
  CHECK(back.grid_size == config.grid_size);
}

TEST_CASE("presets") {
  CHECK(preset_names() == std::vector<std::string>{"benchmark", "benchmark_proper"});
  const ExperimentConfig proper = preset("benchmark_proper");
  CHECK(proper.controller.den.degree() == 1);
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("run_trial emits one row per method/nominal combination") {
  const ExperimentConfig config = small_benchmark(1);
  const std::vector<TrialResult> rows = run_trial(config, 0);
  // dslp once + (dual_youla, coprime) x (g0a, zero, two_stage)
  CHECK(rows.size() == 1 + 2 * 3);

  int dslp_rows = 0, failed = 0;
  std::set<std::uint64_t> primary_hashes;
  for (const TrialResult& row : rows) {
    if (row.method == Method::dslp) {
      ++dslp_rows;
      CHECK(row.nominal == "-");
      CHECK(row.constraint_residual <= 1e-8);
    }
    if (!row.ok) ++failed;
    if (row.nominal != "two_stage") primary_hashes.insert(row.dataset_hash);
  }
  CHECK(dslp_rows == 1);
  // All non-two-stage rows consumed the identical dataset.
  CHECK(primary_hashes.size() == 1);
  // The coprime method fails for the unstabilized nominal (a); nothing else.
  CHECK(failed == 1);
  for (const TrialResult& row : rows)
    if (!row.ok) {
      CHECK(row.method == Method::coprime);
      CHECK(row.nominal == "g0a");
    }
}

TEST_CASE("two-stage rows use the fresh dataset") {
  const ExperimentConfig config = small_benchmark(1);
  const std::vector<TrialResult> rows = run_trial(config, 0);
  std::uint64_t primary = 0, second = 0;
  for (const TrialResult& row : rows) {
    if (row.method == Method::dslp) primary = row.dataset_hash;
    if (row.nominal == "two_stage" && row.method == Method::dual_youla)
      second = row.dataset_hash;
  }
  CHECK(primary != 0);
  CHECK(second != 0);
  CHECK(primary != second);
}

TEST_CASE("run_monte_carlo determinism across runs and worker counts") {
  ExperimentConfig config = small_benchmark(4);
  const ResultsTable serial = run_monte_carlo(config);
  config.threads = 4;
  const ResultsTable parallel = run_monte_carlo(config);

  serial.write_csv("tmp_serial.csv");
  parallel.write_csv("tmp_parallel.csv");
  CHECK(strip_wall_ms(slurp("tmp_serial.csv")) == strip_wall_ms(slurp("tmp_parallel.csv")));
  std::remove("tmp_serial.csv");
  std::remove("tmp_parallel.csv");

  // rows sorted by (trial, method, nominal)
  for (size_t i = 1; i < serial.rows.size(); ++i) {
    const TrialResult& a = serial.rows[i - 1];
    const TrialResult& b = serial.rows[i];
    const auto key = [](const TrialResult& r) {
      return std::make_tuple(r.trial, method_name(r.method), r.nominal);
    };
    CHECK(key(a) < key(b));
  }
}

TEST_CASE("unstable configured loop aborts the run") {
  ExperimentConfig config = small_benchmark(1);
  config.controller = {Polynomial{-0.8, 1.0}, Polynomial{0.0, 0.0, 1.0}};  // unsigned
  CHECK_THROWS_AS(run_monte_carlo(config), UnstableLoop);
}

TEST_CASE("results csv round trip") {
  const ExperimentConfig config = small_benchmark(2);
  const ResultsTable table = run_monte_carlo(config);
  table.write_csv("tmp_results.csv");
  const ResultsTable back = read_results_csv("tmp_results.csv");
  REQUIRE(back.rows.size() == table.rows.size());
  for (size_t i = 0; i < table.rows.size(); ++i) {
    CHECK(back.rows[i].trial == table.rows[i].trial);
    CHECK(back.rows[i].nominal == table.rows[i].nominal);
    if (table.rows[i].ok) {
      CHECK(back.rows[i].err1 == doctest::Approx(table.rows[i].err1).epsilon(1e-15));
      CHECK(back.rows[i].err2 == doctest::Approx(table.rows[i].err2).epsilon(1e-15));
    } else {
      CHECK_FALSE(back.rows[i].ok);
    }
    CHECK(back.rows[i].cl_stable == table.rows[i].cl_stable);
  }
  CHECK(back.failed_rows == table.failed_rows);
  std::remove("tmp_results.csv");
}

TEST_CASE("quantile_type7") {
  SUBCASE("definitional five numbers on 1..5") {
    std::vector<double> v{5, 3, 1, 4, 2};
    CHECK(quantile_type7(v, 0.0) == 1.0);
    CHECK(quantile_type7(v, 0.25) == 2.0);
    CHECK(quantile_type7(v, 0.5) == 3.0);
    CHECK(quantile_type7(v, 0.75) == 4.0);
    CHECK(quantile_type7(v, 1.0) == 5.0);
  }
  SUBCASE("interpolation") {
    CHECK(quantile_type7({1.0, 2.0}, 0.5) == doctest::Approx(1.5));
  }
  SUBCASE("constant column") {
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0})
      CHECK(quantile_type7({2.5, 2.5, 2.5}, p) == 2.5);
  }
}

TEST_CASE("summarize") {
  const ExperimentConfig config = small_benchmark(3);
  const ResultsTable table = run_monte_carlo(config);
  const SummaryStats summary = summarize(table);

  bool found_dslp = false;
  for (const SummaryEntry& entry : summary.entries) {
    CHECK(entry.err1.min <= entry.err1.q1);
    CHECK(entry.err1.q1 <= entry.err1.median);
    CHECK(entry.err1.median <= entry.err1.q3);
    CHECK(entry.err1.q3 <= entry.err1.max);
    if (entry.method == Method::dslp) {
      found_dslp = true;
      CHECK(entry.err1.count == 3);
      CHECK(entry.stable_count == 3);
    }
    if (entry.method == Method::coprime && entry.nominal == "g0a")
      CHECK(entry.failed_count == 3);
  }
  CHECK(found_dslp);

  write_summary_csv(summary, "tmp_summary.csv");
  write_boxplot_data(summary, "tmp_summary.dat");
  const SummaryStats reread = summarize_csv([&] {
    table.write_csv("tmp_results2.csv");
    return std::string("tmp_results2.csv");
  }());
  REQUIRE(reread.entries.size() == summary.entries.size());
  for (size_t i = 0; i < summary.entries.size(); ++i)
    CHECK(reread.entries[i].err1.median ==
          doctest::Approx(summary.entries[i].err1.median).epsilon(1e-14));
  std::remove("tmp_summary.csv");
  std::remove("tmp_summary.dat");
  std::remove("tmp_results2.csv");
}

TEST_CASE("noiseless trial sits at the truncation floor") {
  ExperimentConfig config = small_benchmark(1);
  config.sigma = 0.0;
  config.prbs_periods = 10;
  config.methods = {Method::dslp};
  config.nominals.clear();
  const std::vector<TrialResult> rows = run_trial(config, 0);
  REQUIRE(rows.size() == 1);
  // Per-point relative error <= 1e-4 means the 128-point percent sum stays
  // below 100 * 128 * 1e-4.
  CHECK(rows[0].err1 <= 100.0 * 128 * 1e-4);
  CHECK(rows[0].cl_stable);
}

TEST_CASE("noiseless sweep is flat at the truncation floor") {
  ExperimentConfig config = small_benchmark(1);
  config.sigma = 0.0;
  config.methods = {Method::dslp};
  config.nominals.clear();
  const std::vector<SweepRow> rows = convergence_sweep(config, {511, 1022});
  REQUIRE(rows.size() == 2);
  for (const SweepRow& row : rows) CHECK(row.median_err1 <= 100.0 * 128 * 1e-4);
  const double hi = std::max(rows[0].median_err1, rows[1].median_err1);
  const double lo = std::min(rows[0].median_err1, rows[1].median_err1);
  CHECK(hi <= 5.0 * lo);
}

TEST_CASE("convergence_sweep shapes") {
  ExperimentConfig config = small_benchmark(2);
  config.methods = {Method::dslp};
  config.nominals.clear();
  const std::vector<SweepRow> rows = convergence_sweep(config, {511, 1022});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].length == 511);
  CHECK(rows[1].length == 1022);
  CHECK(rows[0].trials == 2);
  write_sweep_csv(rows, "tmp_sweep.csv");
  std::remove("tmp_sweep.csv");

  CHECK_THROWS_AS(convergence_sweep(config, {1022, 511}), Error);
  CHECK_THROWS_AS(convergence_sweep(config, {10}), LengthTooShort);
}
