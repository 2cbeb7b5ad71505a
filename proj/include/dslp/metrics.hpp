#pragma once

// Frequency-domain percent-sum error metrics and closed-loop stability
// certification. Sums follow the metric definition exactly (no averaging);
// summation is pairwise for order independence.

#include <span>
#include <vector>

#include "dslp/lti.hpp"

namespace dslp {

struct MetricReport {
  double err1 = 0.0;
  double err2 = 0.0;
  bool cl_stable = false;
  int grid_size = 0;
};

/// n equally spaced frequencies from 0 to pi inclusive.
std::vector<double> freq_grid(int n);

/// Sum over the grid of 100 |G - Ghat| / |G| (spectral norm in the matrix
/// case, modulus for SISO). The two responses must share the grid.
double err1(const FrequencyResponse& g, const FrequencyResponse& g_hat);

/// Same percent-sum applied to the closed-loop maps (I - G K)^{-1} G vs
/// (I - Ghat K)^{-1} Ghat evaluated pointwise.
double err2(const FrequencyResponse& g, const FrequencyResponse& g_hat,
            const FrequencyResponse& k);

struct StabilityCertificate {
  bool stable = false;
  double spectral_radius = 0.0;
};

/// Spectral radius of the positive-feedback interconnection state matrix.
StabilityCertificate closed_loop_stable(const StateSpaceModel& g_hat,
                                        const StateSpaceModel& k);

/// Bundles both metrics with the stability certificate for one estimate.
MetricReport evaluate_metrics(const FrequencyResponse& g, const FrequencyResponse& g_hat,
                              const FrequencyResponse& k, const StateSpaceModel& g_hat_ss,
                              const StateSpaceModel& k_ss);

/// Pairwise (cascade) summation; deterministic under reordering of work.
double pairwise_sum(std::span<const double> terms);

} // namespace dslp
