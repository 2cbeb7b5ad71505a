#pragma once

// Dual-Youla and coprime-factor closed-loop identification baselines.
//
// Factor convention: coprime_factorize divides numerator and denominator by
// z^d (d = deg den), so every factor has all poles at the origin. With
// factors X0/Y0 taken from the signed loop controller, the
// stabilization-preserving dual-Youla family under the positive-feedback
// loop equations is
//
//     Ghat = (N0 + R Y0) / (D0 + R X0),
//
// whose loop char function D Y0 - N X0 is invariant in R (texts written for
// the negative-feedback convention carry a minus; the sign is absorbed by
// the signed factors). The coprime-method filter is (D0 - K N0)^{-1} for
// the same reason.

#include <string>
#include <vector>

#include "dslp/loop_sim.hpp"
#include "dslp/lti.hpp"

namespace dslp {

struct CoprimeFactors {
  RationalTF num_factor;   // N0 (plant) or X0 (controller)
  RationalTF den_factor;   // D0 or Y0
  std::string subject;     // "plant" | "controller"

  /// num_factor / den_factor as a single rational.
  RationalTF ratio() const;
};

/// Stable coprime factors by z^d division.
CoprimeFactors coprime_factorize(const RationalTF& tf, std::string subject = "plant");

struct BaselineEstimate {
  RationalTF plant;              // Ghat as a rational
  std::vector<double> taps;      // fitted FIR taps (R for DY; N then D for CP)
  double fit_residual = 0.0;
  bool nominal_stabilized = true;
};

/// Dual-Youla: beta = D0 y - N0 ubar, alpha = Y0 r, FIR fit beta ~ R alpha,
/// Ghat = (N0 + R Y0)/(D0 + R X0). The nominal must be stabilized by the
/// loop controller unless `require_stabilized_nominal` is cleared, in which
/// case the violation is recorded on the estimate.
BaselineEstimate dual_youla_estimate(const LoopDataset& dataset,
                                     const CoprimeFactors& k_factors,
                                     const CoprimeFactors& g0_factors, int horizon,
                                     bool require_stabilized_nominal = true);

/// Coprime-factor method: x = (D0 - K N0)^{-1} r, FIR fits y ~ N x and
/// ubar ~ D x, Ghat = N/D. No stabilization guarantee (recorded downstream).
BaselineEstimate coprime_estimate(const LoopDataset& dataset, const RationalTF& k,
                                  const CoprimeFactors& g0_factors, int horizon);

} // namespace dslp
