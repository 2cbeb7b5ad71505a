#include "dslp/loop_sim.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dslp {

namespace {

constexpr double kStabilityTol = 1e-9;

std::uint64_t fnv1a(std::uint64_t h, const void* data, size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_samples(std::uint64_t h, const Signal& s) {
  return s.samples.empty()
             ? h
             : fnv1a(h, s.samples.data(), s.samples.size() * sizeof(double));
}

std::uint64_t hash_poly(std::uint64_t h, const Polynomial& p) {
  return p.coeffs().empty()
             ? fnv1a(h, "z", 1)
             : fnv1a(h, p.coeffs().data(), p.coeffs().size() * sizeof(double));
}

nlohmann::json tf_to_json(const RationalTF& tf) {
  return {{"num", tf.num.coeffs()}, {"den", tf.den.coeffs()}};
}

} // namespace

LoopReport validate_loop(const LoopConfig& config) {
  LoopReport report;
  if (!config.controller.is_proper())
    throw ImproperTransferFunction("validate_loop: controller must be proper");
  if (!config.noise_filter.is_proper())
    throw ImproperTransferFunction("validate_loop: noise filter must be proper");
  const StabilityReport s_report = tf_is_stable(config.noise_filter);
  if (!s_report.stable)
    throw UnstableLoop("validate_loop: noise filter S is unstable");

  report.characteristic = config.plant.den * config.controller.den -
                          config.plant.num * config.controller.num;
  // Degree collapse at the leading coefficient means 1 - G(inf)K(inf) = 0.
  const int expected_deg = config.plant.den.degree() + config.controller.den.degree();
  report.well_posed = !report.characteristic.is_zero() &&
                      report.characteristic.degree() == expected_deg;
  if (report.characteristic.degree() >= 1) {
    report.poles = poly_roots(report.characteristic);
    for (const Complex& p : report.poles) {
      report.moduli.push_back(std::abs(p));
      report.max_modulus = std::max(report.max_modulus, report.moduli.back());
    }
  }
  report.ok = report.well_posed && report.max_modulus < 1.0 - kStabilityTol;
  return report;
}

Signal composite_reference(const Signal& r1, const Signal& r2, const RationalTF& k,
                           int r1_sign) {
  if (r1.size() != r2.size())
    throw LengthMismatch("composite_reference: r1 and r2 lengths differ");
  std::vector<double> kr1 = tf_simulate(k, r1.samples);
  std::vector<double> r(r1.size());
  for (size_t t = 0; t < r.size(); ++t)
    r[t] = static_cast<double>(r1_sign) * kr1[t] + r2[t];
  return Signal(std::move(r), "r");
}

LoopDataset simulate_loop(const LoopConfig& config) {
  const LoopReport report = validate_loop(config);
  if (!report.well_posed)
    throw IllPosedLoop("simulate_loop: loop is not well posed (1 - G(inf)K(inf) = 0)");
  if (!report.ok) {
    std::ostringstream msg;
    msg << "simulate_loop: closed loop unstable; pole moduli:";
    for (double m : report.moduli)
      if (m >= 1.0 - kStabilityTol) msg << ' ' << m;
    throw UnstableLoop(msg.str());
  }
  if (config.r1.size() != config.r2.size())
    throw LengthMismatch("simulate_loop: r1 and r2 lengths differ");

  const RationalTF& g = config.plant;
  const RationalTF& k = config.controller;
  const RationalTF& s = config.noise_filter;
  const RationalTF one = RationalTF::constant(1.0);

  LoopDataset dataset;
  dataset.rng = config.rng;
  dataset.config_hash = config_hash(config);
  dataset.r1 = config.r1;
  dataset.r1.name = "r1";
  dataset.r2 = config.r2;
  dataset.r2.name = "r2";
  dataset.e = gaussian_noise(config.r2.size(), config.sigma, config.rng);
  dataset.r = composite_reference(config.r1, config.r2, k, config.r1_sign);

  // y = (1-GK)^{-1} G r + (1-GK)^{-1} S e
  const RationalTF t_yr = tf_combine(Combine::feedback, g, k);
  const RationalTF t_ye =
      tf_combine(Combine::series, s,
                 tf_combine(Combine::feedback, one, tf_combine(Combine::series, g, k)));
  std::vector<double> y = tf_simulate(t_yr, dataset.r.samples);
  const std::vector<double> y_noise = tf_simulate(t_ye, dataset.e.samples);
  for (size_t t = 0; t < y.size(); ++t) y[t] += y_noise[t];

  // ubar = (1-KG)^{-1} r + (1-KG)^{-1} K S e
  const RationalTF t_ur =
      tf_combine(Combine::feedback, one, tf_combine(Combine::series, k, g));
  const RationalTF t_ue =
      tf_combine(Combine::series, s, tf_combine(Combine::feedback, k, g));
  std::vector<double> ubar = tf_simulate(t_ur, dataset.r.samples);
  const std::vector<double> ubar_noise = tf_simulate(t_ue, dataset.e.samples);
  for (size_t t = 0; t < ubar.size(); ++t) ubar[t] += ubar_noise[t];

  const std::vector<double> se = tf_simulate(s, dataset.e.samples);
  std::vector<double> ybar(y.size()), u(y.size());
  for (size_t t = 0; t < y.size(); ++t) {
    ybar[t] = y[t] - se[t];
    // Rounding the sum back keeps ubar = u + r2 an exact per-sample identity.
    u[t] = ubar[t] - dataset.r2[t];
    ubar[t] = u[t] + dataset.r2[t];
  }

  dataset.y = Signal(std::move(y), "y");
  dataset.ubar = Signal(std::move(ubar), "ubar");
  dataset.ybar = Signal(std::move(ybar), "ybar");
  dataset.u = Signal(std::move(u), "u");
  return dataset;
}

std::uint64_t config_hash(const LoopConfig& config) {
  std::uint64_t h = 1469598103934665603ULL;
  h = hash_poly(h, config.plant.num);
  h = hash_poly(h, config.plant.den);
  h = hash_poly(h, config.controller.num);
  h = hash_poly(h, config.controller.den);
  h = hash_poly(h, config.noise_filter.num);
  h = hash_poly(h, config.noise_filter.den);
  h = hash_samples(h, config.r1);
  h = hash_samples(h, config.r2);
  h = fnv1a(h, &config.sigma, sizeof(double));
  h = fnv1a(h, &config.rng.seed, sizeof(std::uint64_t));
  h = fnv1a(h, &config.rng.stream, sizeof(std::uint64_t));
  h = fnv1a(h, &config.r1_sign, sizeof(int));
  return h;
}

std::uint64_t dataset_hash(const LoopDataset& dataset) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Signal* s : {&dataset.r1, &dataset.r2, &dataset.e, &dataset.u,
                          &dataset.ubar, &dataset.y, &dataset.ybar, &dataset.r})
    h = hash_samples(h, *s);
  return h;
}

void dataset_to_csv(const LoopDataset& dataset, const LoopConfig& config,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("dataset_to_csv: cannot open " + path);
  out.precision(17);
  out << "t,r1,r2,e,u,ubar,y,ybar,r\n";
  for (size_t t = 0; t < dataset.y.size(); ++t) {
    out << t << ',' << dataset.r1[t] << ',' << dataset.r2[t] << ',' << dataset.e[t]
        << ',' << dataset.u[t] << ',' << dataset.ubar[t] << ',' << dataset.y[t]
        << ',' << dataset.ybar[t] << ',' << dataset.r[t] << '\n';
  }

  nlohmann::json sidecar{
      {"plant", tf_to_json(config.plant)},
      {"controller", tf_to_json(config.controller)},
      {"noise_filter", tf_to_json(config.noise_filter)},
      {"sigma", config.sigma},
      {"seed", config.rng.seed},
      {"stream", config.rng.stream},
      {"r1_sign", config.r1_sign},
      {"config_hash", dataset.config_hash},
  };
  std::ofstream side(path + ".json");
  if (!side) throw Error("dataset_to_csv: cannot open " + path + ".json");
  side << sidecar.dump(2) << '\n';
}

LoopDataset dataset_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("dataset_from_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "t,r1,r2,e,u,ubar,y,ybar,r")
    throw MalformedResults("dataset_from_csv: unexpected header in " + path);
  std::vector<std::vector<double>> cols(8);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // t
    for (auto& col : cols) {
      if (!std::getline(row, cell, ','))
        throw MalformedResults("dataset_from_csv: short row in " + path);
      col.push_back(std::stod(cell));
    }
  }
  LoopDataset dataset;
  const char* names[] = {"r1", "r2", "e", "u", "ubar", "y", "ybar", "r"};
  Signal* fields[] = {&dataset.r1, &dataset.r2, &dataset.e, &dataset.u,
                      &dataset.ubar, &dataset.y, &dataset.ybar, &dataset.r};
  for (int i = 0; i < 8; ++i) *fields[i] = Signal(std::move(cols[i]), names[i]);

  std::ifstream side(path + ".json");
  if (side) {
    nlohmann::json sidecar;
    side >> sidecar;
    dataset.rng.seed = sidecar.value("seed", 0ULL);
    dataset.rng.stream = sidecar.value("stream", 0ULL);
    dataset.config_hash = sidecar.value("config_hash", 0ULL);
  }
  return dataset;
}

} // namespace dslp
