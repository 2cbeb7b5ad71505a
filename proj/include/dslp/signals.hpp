#pragma once

// Excitation and noise generation plus regression-matrix construction.
//
// Randomness is pinned so results are reproducible given (seed, stream):
// a std::mt19937_64 engine seeded with splitmix64(seed ^ GOLDEN*(stream+1)),
// uniform doubles via ((x >> 11) + 1) * 2^-53, and normal draws via the
// Marsaglia polar method. The generator is part of the file-format contract
// and is never silently changed.

#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dslp/errors.hpp"

namespace dslp {

struct Signal {
  std::vector<double> samples;
  std::string name;

  Signal() = default;
  Signal(std::vector<double> s, std::string n = "");

  static Signal zeros(size_t length, std::string name = "");
  size_t size() const { return samples.size(); }
  double operator[](size_t i) const { return samples[i]; }
};

/// Value-semantic RNG coordinates; identical (seed, stream) always
/// reproduces identical draws.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

class Rng {
public:
  explicit Rng(RngStream s);
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in (0, 1].
  double uniform01();
  /// Standard normal via the Marsaglia polar method.
  double normal();

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Primitive feedback taps for common LFSR orders (2..12).
std::set<int> default_prbs_taps(int order);

/// Maximal-length LFSR sequence of period 2^order - 1, bit 1 -> +amplitude,
/// bit 0 -> -amplitude, concatenated `periods` times.
Signal prbs_generate(int order, double amplitude, int periods,
                     const std::set<int>& taps, const std::vector<uint8_t>& init);

/// Same with default taps and the all-ones initial register.
Signal prbs_generate(int order, double amplitude, int periods);

/// i.i.d. N(0, sigma^2) draws, deterministic given the stream.
Signal gaussian_noise(size_t length, double sigma, RngStream rng);

/// len(r) x (horizon+1) matrix whose column j holds r delayed by j samples
/// (zeros for negative time).
Eigen::MatrixXd toeplitz_regressor(const Signal& r, int horizon);

/// CSV with header row `t,value`.
void signal_to_csv(const Signal& s, const std::string& path);
Signal signal_from_csv(const std::string& path, std::string name = "");

} // namespace dslp
