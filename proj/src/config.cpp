#include "dslp/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace dslp {

namespace toml_lite {

namespace {

std::string strip(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Removes a # comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool looks_like_integer(const std::string& s) {
  if (s.empty()) return false;
  size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

Value parse_scalar(const std::string& raw, int line_no) {
  const std::string s = strip(raw);
  if (s.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw ConfigError("config line " + std::to_string(line_no) + ": unterminated string");
    return s.substr(1, s.size() - 2);
  }
  if (s == "true") return true;
  if (s == "false") return false;
  if (looks_like_integer(s)) return static_cast<std::int64_t>(std::stoll(s));
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config line " + std::to_string(line_no) + ": cannot parse value '" + s + "'");
}

Value parse_array(const std::string& raw, int line_no) {
  std::vector<std::string> items;
  std::string cur;
  bool quoted = false;
  for (char c : raw) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      items.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!strip(cur).empty()) items.push_back(cur);

  std::vector<double> nums;
  std::vector<std::string> strs;
  bool numeric = true, stringy = true;
  for (const std::string& item : items) {
    const Value v = parse_scalar(item, line_no);
    if (std::holds_alternative<std::int64_t>(v))
      nums.push_back(static_cast<double>(std::get<std::int64_t>(v)));
    else if (std::holds_alternative<double>(v))
      nums.push_back(std::get<double>(v));
    else
      numeric = false;
    if (std::holds_alternative<std::string>(v))
      strs.push_back(std::get<std::string>(v));
    else
      stringy = false;
  }
  if (numeric) return nums;
  if (stringy) return strs;
  throw ConfigError("config line " + std::to_string(line_no) + ": mixed array types");
}

} // namespace

double Table::number(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key '" + key + "'");
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  throw ConfigError("config key '" + key + "' is not a number");
}

std::int64_t Table::integer(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key '" + key + "'");
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  throw ConfigError("config key '" + key + "' is not an integer");
}

std::string Table::str(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key '" + key + "'");
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw ConfigError("config key '" + key + "' is not a string");
}

std::vector<double> Table::numbers(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key '" + key + "'");
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  throw ConfigError("config key '" + key + "' is not a numeric array");
}

std::vector<std::string> Table::strings(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key '" + key + "'");
  if (const auto* v = std::get_if<std::vector<std::string>>(&it->second)) return *v;
  throw ConfigError("config key '" + key + "' is not a string array");
}

std::map<std::string, Table> parse(const std::string& text) {
  std::map<std::string, Table> tables;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
      section = strip(line.substr(1, line.size() - 2));
      tables[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated array");
      tables[section].values[key] = parse_array(value.substr(1, value.size() - 2), line_no);
    } else {
      tables[section].values[key] = parse_scalar(value, line_no);
    }
  }
  return tables;
}

} // namespace toml_lite

std::string method_name(Method m) {
  switch (m) {
    case Method::dslp: return "dslp";
    case Method::dual_youla: return "dual_youla";
    case Method::coprime: return "coprime";
  }
  return "?";
}

size_t ExperimentConfig::dataset_length() const {
  if (length_override > 0) return length_override;
  return static_cast<size_t>(prbs_periods) * ((1u << prbs_order) - 1u);
}

namespace {

RationalTF tf_from_table(const toml_lite::Table& t, const std::string& what) {
  if (!t.has("num") || !t.has("den"))
    throw ConfigError("section [" + what + "] must define num and den arrays");
  return {Polynomial(t.numbers("num")), Polynomial(t.numbers("den"))};
}

Method method_from_name(const std::string& name) {
  if (name == "dslp") return Method::dslp;
  if (name == "dual_youla") return Method::dual_youla;
  if (name == "coprime") return Method::coprime;
  throw ConfigError("unknown method '" + name + "'");
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
  const auto tables = toml_lite::parse(text);
  auto table = [&](const std::string& name) -> const toml_lite::Table& {
    auto it = tables.find(name);
    if (it == tables.end()) throw ConfigError("missing config section [" + name + "]");
    return it->second;
  };

  ExperimentConfig config;
  config.plant = tf_from_table(table("plant"), "plant");
  config.controller = tf_from_table(table("controller"), "controller");
  config.noise_filter = tf_from_table(table("noise_filter"), "noise_filter");

  const toml_lite::Table& exc = table("excitation");
  config.prbs_order = static_cast<int>(exc.integer("order"));
  config.prbs_amplitude = exc.number("amplitude");
  config.prbs_periods = static_cast<int>(exc.integer("periods"));
  config.sigma = exc.number("sigma");
  if (exc.has("r1_sign")) config.r1_sign = static_cast<int>(exc.integer("r1_sign"));

  const toml_lite::Table& est = table("estimation");
  config.horizon = static_cast<int>(est.integer("horizon"));
  config.methods.clear();
  for (const std::string& name : est.strings("methods"))
    config.methods.push_back(method_from_name(name));
  config.nominals.clear();
  if (est.has("nominals")) {
    for (const std::string& name : est.strings("nominals")) {
      NominalSpec spec;
      spec.label = name;
      if (name == "zero") {
        spec.kind = NominalSpec::Kind::zero;
      } else if (name == "two_stage") {
        spec.kind = NominalSpec::Kind::two_stage;
      } else {
        auto it = tables.find("nominal." + name);
        if (it == tables.end())
          throw ConfigError("nominal '" + name + "' has no [nominal." + name + "] table");
        spec.kind = NominalSpec::Kind::expr;
        spec.plant = tf_from_table(it->second, "nominal." + name);
      }
      config.nominals.push_back(std::move(spec));
    }
  }

  if (auto it = tables.find("run"); it != tables.end()) {
    const toml_lite::Table& run = it->second;
    if (run.has("trials")) config.trials = static_cast<int>(run.integer("trials"));
    if (run.has("seed")) config.base_seed = static_cast<std::uint64_t>(run.integer("seed"));
    if (run.has("grid_size")) config.grid_size = static_cast<int>(run.integer("grid_size"));
    if (run.has("threads")) config.threads = static_cast<int>(run.integer("threads"));
  }
  if (auto it = tables.find("output"); it != tables.end()) {
    const toml_lite::Table& out = it->second;
    if (out.has("results")) config.results_path = out.str("results");
    if (out.has("summary")) config.summary_path = out.str("summary");
  }

  if (config.trials < 1) throw ConfigError("trials must be >= 1");
  if (config.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (config.grid_size < 2) throw ConfigError("grid_size must be >= 2");
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

namespace {

void append_array(std::ostream& out, const std::vector<double>& v) {
  out << '[';
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    out << v[i];
  }
  out << ']';
}

} // namespace

std::string config_to_toml(const ExperimentConfig& config) {
  std::ostringstream out;
  out.precision(17);
  auto tf_section = [&](const char* name, const RationalTF& tf) {
    out << '[' << name << "]\n" << "num = ";
    append_array(out, tf.num.coeffs());
    out << "\nden = ";
    append_array(out, tf.den.coeffs());
    out << "\n\n";
  };
  tf_section("plant", config.plant);
  tf_section("controller", config.controller);
  tf_section("noise_filter", config.noise_filter);

  out << "[excitation]\norder = " << config.prbs_order
      << "\namplitude = " << config.prbs_amplitude
      << "\nperiods = " << config.prbs_periods << "\nsigma = " << config.sigma
      << "\nr1_sign = " << config.r1_sign << "\n\n";

  out << "[estimation]\nhorizon = " << config.horizon << "\nmethods = [";
  for (size_t i = 0; i < config.methods.size(); ++i) {
    if (i) out << ", ";
    out << '"' << method_name(config.methods[i]) << '"';
  }
  out << "]\nnominals = [";
  for (size_t i = 0; i < config.nominals.size(); ++i) {
    if (i) out << ", ";
    out << '"' << config.nominals[i].label << '"';
  }
  out << "]\n\n";

  for (const NominalSpec& spec : config.nominals) {
    if (spec.kind != NominalSpec::Kind::expr) continue;
    out << "[nominal." << spec.label << "]\nnum = ";
    append_array(out, spec.plant.num.coeffs());
    out << "\nden = ";
    append_array(out, spec.plant.den.coeffs());
    out << "\n\n";
  }

  out << "[run]\ntrials = " << config.trials << "\nseed = " << config.base_seed
      << "\ngrid_size = " << config.grid_size << "\nthreads = " << config.threads
      << "\n\n[output]\nresults = \"" << config.results_path << "\"\nsummary = \""
      << config.summary_path << "\"\n";
  return out.str();
}

std::vector<std::string> preset_names() { return {"benchmark", "benchmark_proper"}; }

ExperimentConfig preset(const std::string& name) {
  // Benchmark system: G = z^2/(z^2 - 1.6 z + 0.89) with the signed loop
  // controller (closed-loop poles {0, 0, 0.3, 0.3}); S shares the plant
  // poles plus one at 0.75.
  ExperimentConfig config;
  config.plant = {Polynomial{0.0, 0.0, 1.0}, Polynomial{0.89, -1.6, 1.0}};
  config.noise_filter = {Polynomial{-0.3338, 1.045, -1.56, 1.0},
                         Polynomial{-0.6675, 2.09, -2.35, 1.0}};
  NominalSpec g0a;
  g0a.kind = NominalSpec::Kind::expr;
  g0a.label = "g0a";
  g0a.plant = {Polynomial{-1.0}, Polynomial{0.5, 1.0}};
  NominalSpec zero;
  zero.kind = NominalSpec::Kind::zero;
  zero.label = "zero";
  NominalSpec two_stage;
  two_stage.kind = NominalSpec::Kind::two_stage;
  two_stage.label = "two_stage";
  config.nominals = {g0a, zero, two_stage};

  if (name == "benchmark") {
    config.controller = {Polynomial{0.8, -1.0}, Polynomial{0.0, 0.0, 1.0}};
    return config;
  }
  if (name == "benchmark_proper") {
    config.controller = {Polynomial{0.8, -1.0}, Polynomial{0.0, 1.0}};
    return config;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

} // namespace dslp
