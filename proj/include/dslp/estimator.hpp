#pragma once

// The D-SLP identification pipeline: constrained least-squares estimation of
// the dual FIR parameters and plant recovery.
//
// The estimation solves
//     min_theta || y - Phi(r) S_L theta ||^2   s.t.  E theta = f
// by null-space elimination: a particular solution theta_p and an
// orthonormal null-space basis Z of E come from a rank-revealing SVD, the
// reduced unconstrained problem is solved in the Z coordinates, and the
// result is mapped back. The constraints are enforced, not penalized; every
// estimate satisfies the subspace to roughly machine precision.
//
// Proper controllers: constraints are built from the strictly proper part
// (A_k, B_k, C_k); the feedthrough D_k only enters plant recovery through
// Ghat = Gcheck (I + D_k Gcheck)^{-1}. No data preprocessing is needed: the
// reference-to-output map of the loop with the full controller equals the
// dual L of the pair (Gcheck, strictly proper part) algebraically (verified
// in the test suite on rationals).

#include <span>
#include <string>

#include "dslp/loop_sim.hpp"
#include "dslp/lti.hpp"
#include "dslp/sls_subspace.hpp"

namespace dslp {

struct DualSlsEstimate {
  FirParams params;
  StateSpaceModel controller;        // realization used (feedthrough removed)
  Eigen::MatrixXd D_k;               // controller feedthrough, kept aside
  double fit_residual = 0.0;         // ||y - Phi S_L theta||
  double constraint_residual = 0.0;  // max |E theta - f|
  bool regressor_rank_deficient = false;
  int null_dim = 0;

  std::string to_json() const;
};

/// Fits the dual FIR parameters to (y, r) of the dataset under the affine
/// subspace of the controller realization. The controller's D is set aside
/// for recovery; constraints use (A_k, B_k, C_k) only.
DualSlsEstimate estimate_dual_params(const LoopDataset& dataset,
                                     const StateSpaceModel& controller, int horizon);

/// Pointwise plant recovery Ghat(e^{jw}) = L - M R^{-1} N, with the
/// feedthrough correction Ghat = Gcheck (I + D_k Gcheck)^{-1} when D_k != 0.
FrequencyResponse recover_plant_freqresp(const DualSlsEstimate& estimate,
                                         std::span<const double> omegas);

/// Finite-dimensional realization of the recovered plant: the state stacks
/// the shift registers of the FIR blocks z(I - zR), zM, zN in the feedback
/// interconnection; the D_k correction closes an output feedback around it.
StateSpaceModel realize_plant_ss(const DualSlsEstimate& estimate);

/// (Tbar^{-1} A Tbar, Tbar^{-1} B, C Tbar, D).
StateSpaceModel transform_realization(const StateSpaceModel& ss,
                                      const Eigen::MatrixXd& tbar);

/// The parameter transform matching transform_realization:
/// (Tbar R Tbar^{-1}, M Tbar^{-1}, Tbar N, L).
FirParams expected_param_transform(const FirParams& params, const Eigen::MatrixXd& tbar);

} // namespace dslp
