#pragma once

// FIR representation of system-level parameters and the linear equality
// system encoding their affine subspace, generic over any realization
// (A, B, C) and horizon T. Built once for the dual side (controller
// realization), but the same mechanics reproduce the primal subspace when
// fed a plant realization.
//
// Tap index convention: R, M, N carry delays 1..T+1, L carries delays 0..T.
// A text writing R = sum_{i=0}^{T} z^{-i-1} R[i] maps by i -> delay i+1.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dslp/lti.hpp"

namespace dslp {

/// The four FIR tap families {R, M, N, L} for a realization with state
/// dimension n, input dimension q (= cols(B)) and output dimension s
/// (= rows(C)). R: n x n, M: q x n, N: n x s, L: q x s.
struct FirParams {
  int horizon = 0;                      // T
  std::vector<Eigen::MatrixXd> R;       // index i -> delay i+1, size T+1
  std::vector<Eigen::MatrixXd> M;       // index i -> delay i+1
  std::vector<Eigen::MatrixXd> N;       // index i -> delay i+1
  std::vector<Eigen::MatrixXd> L;       // index i -> delay i, size T+1

  static FirParams zeros(int n, int q, int s, int horizon);
  int n() const { return R.empty() ? 0 : static_cast<int>(R[0].rows()); }
  int q() const { return M.empty() ? 0 : static_cast<int>(M[0].rows()); }
  int s() const { return N.empty() ? 0 : static_cast<int>(N[0].cols()); }

  /// Evaluates one family at z (sum of taps times z^-delay).
  Eigen::MatrixXcd eval_R(Complex z) const;
  Eigen::MatrixXcd eval_M(Complex z) const;
  Eigen::MatrixXcd eval_N(Complex z) const;
  Eigen::MatrixXcd eval_L(Complex z) const;

  std::string to_json() const;
  static FirParams from_json(const std::string& text);
};

enum class TapBlock : char { R = 'R', M = 'M', N = 'N', L = 'L' };

/// Maps one coordinate of the stacked unknown vector theta to a tap entry.
struct TapCoord {
  TapBlock block;
  int delay;
  int row;
  int col;
};

/// The stacked equality system E theta = f. Rows are the scalar equations
/// obtained by matching powers z^0 .. z^{-(T+1)} in both constraint
/// families; redundant rows are retained (the downstream null-space method
/// is rank-revealing).
struct AffineSystem {
  Eigen::SparseMatrix<double> E;
  Eigen::VectorXd f;
  std::vector<TapCoord> layout;         // column index -> tap coordinate
  std::vector<int> row_family;          // row index -> family 0..3
  int n = 0, q = 0, s = 0, horizon = 0;
  int offset_R = 0, offset_M = 0, offset_N = 0, offset_L = 0;

  int num_unknowns() const { return static_cast<int>(E.cols()); }
  int index_of(TapBlock block, int delay, int row, int col) const;
  Eigen::VectorXd pack(const FirParams& params) const;
  FirParams unpack(const Eigen::VectorXd& theta) const;
};

/// Emits the scalar equations of the two families
///   [zI-A  -B] [R N; M L] = [I 0]      and
///   [R N; M L] [zI-A; -C] = [I; 0]
/// with taps outside the stored delay ranges treated as zero.
AffineSystem build_affine_constraints(const Eigen::MatrixXd& A,
                                      const Eigen::MatrixXd& B,
                                      const Eigen::MatrixXd& C, int horizon);

struct FeasibilityReport {
  bool feasible = false;
  double residual = 0.0;       // ||E theta_p - f||
  int rank = 0;
  int null_dim = 0;            // number of free parameters
};

/// Least-squares feasibility probe; feasible iff residual <= 1e-8 (1+||f||).
FeasibilityReport check_feasibility(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::MatrixXd& C, int horizon);

struct ResidualReport {
  double max_abs = 0.0;
  double family_max[4] = {0.0, 0.0, 0.0, 0.0};
  bool within(double tol) const { return max_abs <= tol; }
};

/// Packs params into theta and reports max |E theta - f| with a per-family
/// breakdown.
ResidualReport verify_params(const FirParams& params, const Eigen::MatrixXd& A,
                             const Eigen::MatrixXd& B, const Eigen::MatrixXd& C);

/// Test oracle: exact dual responses of the loop (G, realization) truncated
/// to the FIR delay ranges, extracted by time-domain impulse simulation.
/// The taps need not satisfy the FIR terminal constraints.
FirParams true_dual_params(const RationalTF& g, const Eigen::MatrixXd& A,
                           const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                           int horizon);

} // namespace dslp
