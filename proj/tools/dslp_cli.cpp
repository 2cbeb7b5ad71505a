// Command-line front end: Monte Carlo runs, convergence sweeps, result
// summaries, and built-in benchmark presets.
//
// Exit codes: 0 success, 2 config error, 3 unstable loop, 4 partial
// failures present in the results.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dslp/harness.hpp"

namespace {

dslp::ExperimentConfig resolve_config(const std::string& config_path,
                                      const std::string& preset_name) {
  if (!preset_name.empty()) return dslp::preset(preset_name);
  if (config_path.empty())
    throw dslp::ConfigError("either --config or --preset is required");
  return dslp::load_config(config_path);
}

int run_command(const std::string& config_path, const std::string& preset_name,
                int trials, std::int64_t seed, const std::string& out,
                int threads, int grid) {
  dslp::ExperimentConfig config = resolve_config(config_path, preset_name);
  if (trials > 0) config.trials = trials;
  if (seed >= 0) config.base_seed = static_cast<std::uint64_t>(seed);
  if (threads >= 0) config.threads = threads;
  if (grid > 0) config.grid_size = grid;
  if (!out.empty()) config.results_path = out;

  const dslp::ResultsTable table = dslp::run_monte_carlo(config);
  table.write_csv(config.results_path);
  const dslp::SummaryStats summary = dslp::summarize(table);
  dslp::write_summary_csv(summary, config.summary_path);
  dslp::write_boxplot_data(summary, config.summary_path + ".dat");

  std::cout << "wrote " << table.rows.size() << " rows to " << config.results_path
            << " (summary: " << config.summary_path << ")\n";
  for (const dslp::SummaryEntry& entry : summary.entries) {
    std::cout << "  " << dslp::method_name(entry.method) << " / " << entry.nominal << ": ";
    if (entry.err1.count > 0)
      std::cout << "median err1 = " << entry.err1.median
                << ", median err2 = " << entry.err2.median;
    else
      std::cout << "no successful rows";
    std::cout << ", stable " << entry.stable_count << "/"
              << entry.err1.count + entry.failed_count;
    if (entry.failed_count > 0) std::cout << " (" << entry.failed_count << " failed)";
    std::cout << '\n';
  }
  return table.failed_rows > 0 ? 4 : 0;
}

int sweep_command(const std::string& config_path, const std::string& preset_name,
                  const std::vector<size_t>& lengths, int trials, std::int64_t seed,
                  const std::string& out, int threads, int grid) {
  dslp::ExperimentConfig config = resolve_config(config_path, preset_name);
  if (trials > 0) config.trials = trials;
  if (seed >= 0) config.base_seed = static_cast<std::uint64_t>(seed);
  if (threads >= 0) config.threads = threads;
  if (grid > 0) config.grid_size = grid;

  const std::vector<dslp::SweepRow> rows = dslp::convergence_sweep(config, lengths);
  dslp::write_sweep_csv(rows, out);
  std::cout << "wrote " << rows.size() << " sweep rows to " << out << '\n';
  for (const dslp::SweepRow& row : rows)
    if (row.method == dslp::Method::dslp)
      std::cout << "  n = " << row.length << ": dslp median err1 = " << row.median_err1
                << '\n';
  return 0;
}

int summarize_command(const std::string& in, const std::string& out) {
  const dslp::SummaryStats summary = dslp::summarize_csv(in);
  dslp::write_summary_csv(summary, out);
  dslp::write_boxplot_data(summary, out + ".dat");
  std::cout << "wrote summary to " << out << " and " << out << ".dat\n";
  return 0;
}

int presets_command(const std::string& dump) {
  if (!dump.empty()) {
    std::cout << dslp::config_to_toml(dslp::preset(dump));
    return 0;
  }
  for (const std::string& name : dslp::preset_names()) std::cout << name << '\n';
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop system identification benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out, in;
  int trials = -1, threads = -1, grid = -1;
  std::int64_t seed = -1;
  std::vector<size_t> lengths;

  CLI::App* run = app.add_subcommand("run", "Run the Monte Carlo benchmark");
  run->add_option("--config", config_path, "TOML config file");
  run->add_option("--preset", preset_name, "Built-in preset name");
  run->add_option("--trials", trials, "Override trial count");
  run->add_option("--seed", seed, "Override base seed");
  run->add_option("--out", out, "Results CSV path");
  run->add_option("--threads", threads, "Worker threads (0 = hardware)");
  run->add_option("--grid", grid, "Metric grid size");

  CLI::App* sweep = app.add_subcommand("sweep", "Convergence sweep over data lengths");
  sweep->add_option("--config", config_path, "TOML config file");
  sweep->add_option("--preset", preset_name, "Built-in preset name");
  sweep->add_option("--lengths", lengths, "Comma-separated data lengths")
      ->required()
      ->delimiter(',');
  sweep->add_option("--trials", trials, "Override trial count");
  sweep->add_option("--seed", seed, "Override base seed");
  sweep->add_option("--out", out, "Sweep CSV path")->required();
  sweep->add_option("--threads", threads, "Worker threads (0 = hardware)");
  sweep->add_option("--grid", grid, "Metric grid size");

  CLI::App* summ = app.add_subcommand("summarize", "Five-number summaries of a results CSV");
  summ->add_option("--in", in, "Results CSV path")->required();
  summ->add_option("--out", out, "Summary CSV path")->required();

  std::string dump;
  CLI::App* presets = app.add_subcommand("presets", "List built-in configs");
  presets->add_option("--dump", dump, "Print one preset as TOML");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path, preset_name, trials, seed, out, threads, grid);
    if (sweep->parsed())
      return sweep_command(config_path, preset_name, lengths, trials, seed, out, threads, grid);
    if (summ->parsed()) return summarize_command(in, out);
    if (presets->parsed()) return presets_command(dump);
  } catch (const dslp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const dslp::UnstableLoop& e) {
    std::cerr << "unstable loop: " << e.what() << '\n';
    return 3;
  } catch (const dslp::IllPosedLoop& e) {
    std::cerr << "ill-posed loop: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
