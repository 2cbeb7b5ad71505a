#pragma once

// Closed-loop data generation for the configuration
//
//     ubar = K y + r,    y = G ubar + S e,    r = r1_sign * K r1 + r2.
//
// The loop equations are taken literally in positive feedback: a controller
// written for a negative summing junction enters as a sign-flipped K. For
// the benchmark plant G = z^2/(z^2 - 1.6 z + 0.89) this means
// K_loop = -(z - 0.8)/z^2, which places the closed-loop poles at
// {0, 0, 0.3, 0.3}; the unsigned controller would put them at 1.3.

#include <cstdint>
#include <string>

#include "dslp/lti.hpp"
#include "dslp/signals.hpp"

namespace dslp {

struct LoopConfig {
  RationalTF plant;          // G
  RationalTF controller;     // signed loop controller K
  RationalTF noise_filter;   // S, stable and proper
  Signal r1;
  Signal r2;
  double sigma = 0.0;
  RngStream rng;
  int r1_sign = +1;          // r = r1_sign * K r1 + r2
};

struct LoopReport {
  bool ok = false;
  bool well_posed = false;
  Polynomial characteristic;           // den_G den_K - num_G num_K
  std::vector<Complex> poles;
  std::vector<double> moduli;
  double max_modulus = 0.0;
};

/// Checks well-posedness and closed-loop stability of (G, K); also verifies
/// S is proper and stable. `ok` requires every pole modulus < 1 - 1e-9.
LoopReport validate_loop(const LoopConfig& config);

struct LoopDataset {
  Signal r1, r2, e, u, ubar, y, ybar, r;
  std::uint64_t config_hash = 0;
  RngStream rng;
};

/// Simulates one closed-loop run by filtering r and e through the composed
/// closed-loop rationals. Throws UnstableLoop / IllPosedLoop when
/// validate_loop fails.
LoopDataset simulate_loop(const LoopConfig& config);

/// r = r1_sign * tf_simulate(K, r1) + r2.
Signal composite_reference(const Signal& r1, const Signal& r2, const RationalTF& k,
                           int r1_sign = +1);

/// FNV-1a over the sample bytes of all dataset signals.
std::uint64_t dataset_hash(const LoopDataset& dataset);
std::uint64_t config_hash(const LoopConfig& config);

/// CSV columns t,r1,r2,e,u,ubar,y,ybar,r plus a JSON sidecar (config + seed)
/// at path + ".json".
void dataset_to_csv(const LoopDataset& dataset, const LoopConfig& config,
                    const std::string& path);
LoopDataset dataset_from_csv(const std::string& path);

} // namespace dslp
