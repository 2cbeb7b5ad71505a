#include "dslp/signals.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace dslp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void check_finite(const std::vector<double>& samples, const std::string& name) {
  for (double v : samples)
    if (!std::isfinite(v))
      throw NonFiniteSample("Signal '" + name + "' contains a non-finite sample");
}

} // namespace

Signal::Signal(std::vector<double> s, std::string n)
    : samples(std::move(s)), name(std::move(n)) {
  check_finite(samples, name);
}

Signal Signal::zeros(size_t length, std::string name) {
  return Signal(std::vector<double>(length, 0.0), std::move(name));
}

Rng::Rng(RngStream s)
    : engine_(splitmix64(s.seed ^ (0x9E3779B97F4A7C15ULL * (s.stream + 1)))) {}

double Rng::uniform01() {
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::set<int> default_prbs_taps(int order) {
  // One primitive feedback polynomial per order.
  switch (order) {
    case 2: return {2, 1};
    case 3: return {3, 2};
    case 4: return {4, 3};
    case 5: return {5, 3};
    case 6: return {6, 5};
    case 7: return {7, 6};
    case 8: return {8, 6, 5, 4};
    case 9: return {9, 5};
    case 10: return {10, 7};
    case 11: return {11, 9};
    case 12: return {12, 11, 10, 4};
    default:
      throw Error("default_prbs_taps: no table entry for order " + std::to_string(order));
  }
}

Signal prbs_generate(int order, double amplitude, int periods,
                     const std::set<int>& taps, const std::vector<uint8_t>& init) {
  if (order < 2) throw Error("prbs_generate: order must be >= 2");
  if (periods < 1) throw Error("prbs_generate: periods must be >= 1");
  if (init.size() != static_cast<size_t>(order))
    throw DimensionMismatch("prbs_generate: init register length != order");
  bool any = false;
  for (uint8_t b : init) any = any || (b != 0);
  if (!any) throw ZeroInitialState("prbs_generate: all-zero initial register");
  for (int t : taps)
    if (t < 1 || t > order) throw Error("prbs_generate: tap outside 1..order");

  const int period = (1 << order) - 1;
  // One full period from a Fibonacci LFSR; bit index i holds the bit that
  // entered i steps ago, output is the oldest bit.
  std::vector<uint8_t> state(init);
  std::vector<uint8_t> bits;
  bits.reserve(period);
  for (int t = 0; t < period; ++t) {
    bits.push_back(state[order - 1]);
    uint8_t fb = 0;
    for (int tap : taps) fb ^= state[tap - 1];
    for (int i = order - 1; i > 0; --i) state[i] = state[i - 1];
    state[0] = fb;
    if (state == init && t + 1 < period)
      throw NonMaximalLength("prbs_generate: register cycled after " +
                             std::to_string(t + 1) + " steps, expected " +
                             std::to_string(period));
  }
  if (state != init)
    throw NonMaximalLength("prbs_generate: feedback taps do not give period 2^order - 1");

  std::vector<double> samples;
  samples.reserve(static_cast<size_t>(periods) * period);
  for (int p = 0; p < periods; ++p)
    for (uint8_t b : bits) samples.push_back(b ? amplitude : -amplitude);
  return Signal(std::move(samples), "prbs");
}

Signal prbs_generate(int order, double amplitude, int periods) {
  return prbs_generate(order, amplitude, periods, default_prbs_taps(order),
                       std::vector<uint8_t>(order, 1));
}

Signal gaussian_noise(size_t length, double sigma, RngStream rng) {
  if (sigma < 0.0) throw NegativeSigma("gaussian_noise: sigma < 0");
  std::vector<double> samples(length, 0.0);
  if (sigma > 0.0) {
    Rng gen(rng);
    for (double& v : samples) v = sigma * gen.normal();
  }
  return Signal(std::move(samples), "e");
}

Eigen::MatrixXd toeplitz_regressor(const Signal& r, int horizon) {
  if (r.size() == 0) throw EmptySignal("toeplitz_regressor: empty signal");
  if (horizon < 0) throw Error("toeplitz_regressor: horizon must be >= 0");
  if (r.size() <= static_cast<size_t>(horizon))
    throw Error("toeplitz_regressor: signal shorter than horizon + 1");
  const auto n = static_cast<Eigen::Index>(r.size());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, horizon + 1);
  for (int j = 0; j <= horizon; ++j)
    for (Eigen::Index t = j; t < n; ++t) phi(t, j) = r[t - j];
  return phi;
}

void signal_to_csv(const Signal& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("signal_to_csv: cannot open " + path);
  out << "t,value\n";
  out.precision(17);
  for (size_t t = 0; t < s.size(); ++t) out << t << ',' << s[t] << '\n';
}

Signal signal_from_csv(const std::string& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw Error("signal_from_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,value", 0) != 0)
    throw MalformedResults("signal_from_csv: missing 't,value' header in " + path);
  std::vector<double> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw MalformedResults("signal_from_csv: malformed row in " + path);
    samples.push_back(std::stod(line.substr(comma + 1)));
  }
  return Signal(std::move(samples), std::move(name));
}

} // namespace dslp
