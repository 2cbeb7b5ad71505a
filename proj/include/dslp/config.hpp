#pragma once

// Experiment configuration: TOML file parsing and built-in presets.
//
// The reader covers the subset the config format uses: [section] and
// [section.sub] headers, `key = value` lines, values that are integers,
// floats, booleans, quoted strings, or homogeneous arrays of those, and #
// comments. Layout:
//
//   [plant] / [controller] / [noise_filter]   num, den (ascending arrays)
//   [excitation]   order, amplitude, periods, sigma, r1_sign (optional)
//   [estimation]   horizon, methods (array), nominals (array of names;
//                  "zero" and "two_stage" are built in, anything else must
//                  have a matching [nominal.<name>] table with num/den)
//   [output]       results, summary (paths; optional)
//   [run]          trials, seed, grid_size, threads (optional)

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dslp/lti.hpp"

namespace dslp {

enum class Method { dslp, dual_youla, coprime };
std::string method_name(Method m);

struct NominalSpec {
  enum class Kind { expr, zero, two_stage };
  Kind kind = Kind::zero;
  std::string label;       // "zero", "two_stage", or the table name
  RationalTF plant;        // for Kind::expr
};

struct ExperimentConfig {
  RationalTF plant;
  RationalTF controller;       // signed loop controller
  RationalTF noise_filter;
  int prbs_order = 9;
  double prbs_amplitude = 10.0;
  int prbs_periods = 10;
  double sigma = 2.0;
  int r1_sign = +1;
  int horizon = 15;
  std::vector<Method> methods{Method::dslp, Method::dual_youla, Method::coprime};
  std::vector<NominalSpec> nominals;
  int trials = 100;
  std::uint64_t base_seed = 1;
  int grid_size = 5110;
  int threads = 0;             // 0 = hardware concurrency
  std::string results_path = "results.csv";
  std::string summary_path = "summary.csv";

  /// Samples per dataset; 0 means periods * (2^order - 1).
  size_t length_override = 0;
  size_t dataset_length() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);
std::string config_to_toml(const ExperimentConfig& config);

/// Built-in benchmark presets: "benchmark" (strictly proper loop
/// controller) and "benchmark_proper".
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

// Minimal TOML-subset reader, exposed for tests.
namespace toml_lite {

using Value = std::variant<std::int64_t, double, bool, std::string,
                           std::vector<double>, std::vector<std::string>>;

struct Table {
  std::map<std::string, Value> values;   // key -> value within one section

  bool has(const std::string& key) const { return values.count(key) != 0; }
  double number(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> strings(const std::string& key) const;
};

/// section name ("" for the root) -> table.
std::map<std::string, Table> parse(const std::string& text);

} // namespace toml_lite

} // namespace dslp
