#pragma once

// Discrete-time LTI primitives: polynomials in z, SISO rational transfer
// functions, state-space models, frequency responses, root finding,
// stability checks and simulation.
//
// Polynomial coefficients are stored ascending in z (coeffs[k] multiplies
// z^k). Control texts usually write polynomials descending; the mapping is
// simply index reversal.

#include <complex>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dslp/errors.hpp"

namespace dslp {

using Complex = std::complex<double>;

class Polynomial {
public:
  Polynomial() = default;
  Polynomial(std::initializer_list<double> coeffs)
      : coeffs_(coeffs) { trim(); }
  explicit Polynomial(std::vector<double> coeffs)
      : coeffs_(std::move(coeffs)) { trim(); }

  static Polynomial zero() { return Polynomial{}; }
  static Polynomial one() { return Polynomial{1.0}; }
  /// z^k, k >= 0.
  static Polynomial shift(int k);

  bool is_zero() const { return coeffs_.empty(); }
  /// Degree of the polynomial; -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  /// Coefficient of z^i (0 outside the stored range).
  double coeff(int i) const {
    return (i >= 0 && i < static_cast<int>(coeffs_.size())) ? coeffs_[i] : 0.0;
  }
  double leading() const { return coeffs_.empty() ? 0.0 : coeffs_.back(); }
  const std::vector<double>& coeffs() const { return coeffs_; }

  Complex eval(Complex z) const;      // Horner
  double eval(double x) const;
  double max_abs_coeff() const;

  friend Polynomial operator+(const Polynomial& p, const Polynomial& q);
  friend Polynomial operator-(const Polynomial& p, const Polynomial& q);
  friend Polynomial operator*(const Polynomial& p, const Polynomial& q);
  friend Polynomial operator*(double s, const Polynomial& p);
  bool operator==(const Polynomial& other) const { return coeffs_ == other.coeffs_; }

private:
  void trim();  // drop exact trailing zeros
  std::vector<double> coeffs_;
};

/// Convolution of coefficient sequences.
Polynomial poly_mul(const Polynomial& p, const Polynomial& q);

/// All deg(p) roots via eigenvalues of the balanced companion matrix,
/// sorted by (real, imaginary) parts.
std::vector<Complex> poly_roots(const Polynomial& p);

/// Monic polynomial with the given roots, scaled by `leading`. Imaginary
/// residue of conjugate pairing is discarded.
Polynomial poly_from_roots(std::span<const Complex> roots, double leading = 1.0);

/// SISO rational transfer function in z. The representation keeps num/den
/// exactly as given: no automatic pole-zero cancellation (see `reduce`).
struct RationalTF {
  Polynomial num;
  Polynomial den;

  RationalTF() : num(Polynomial::zero()), den(Polynomial::one()) {}
  RationalTF(Polynomial n, Polynomial d);

  static RationalTF zero() { return RationalTF(); }
  static RationalTF constant(double c) { return {Polynomial{c}, Polynomial::one()}; }

  bool is_proper() const { return num.degree() <= den.degree(); }
  bool is_strictly_proper() const { return num.degree() < den.degree(); }
  /// Value at z = infinity (0 for strictly proper).
  double at_infinity() const;
};

/// num(z)/den(z) by Horner evaluation.
Complex tf_eval(const RationalTF& tf, Complex z);

struct StabilityReport {
  bool stable = false;
  std::vector<Complex> poles;
  std::vector<double> moduli;
  double max_modulus = 0.0;
};

/// Pole check on den as stored; no common-factor cancellation. Stable iff
/// every pole modulus < 1 - 1e-9. A den of degree 0 has no poles (stable).
StabilityReport tf_is_stable(const RationalTF& tf);

struct StateSpaceModel {
  Eigen::MatrixXd A, B, C, D;

  StateSpaceModel() : A(0, 0), B(0, 1), C(1, 0), D(Eigen::MatrixXd::Zero(1, 1)) {}
  StateSpaceModel(Eigen::MatrixXd A_, Eigen::MatrixXd B_, Eigen::MatrixXd C_,
                  Eigen::MatrixXd D_);

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
  int output_dim() const { return static_cast<int>(C.rows()); }
  bool strictly_proper() const { return D.isZero(0.0); }
};

/// Controllable canonical realization of a proper SISO transfer function.
StateSpaceModel tf_to_ss(const RationalTF& tf);

/// Eigenvalues of A, sorted by (real, imaginary) parts.
std::vector<Complex> ss_eigenvalues(const StateSpaceModel& ss);

/// One-sample-at-a-time direct-form filter for a proper rational TF,
/// zero initial state.
class TfFilter {
public:
  explicit TfFilter(const RationalTF& tf);
  double step(double u);
  void reset();

private:
  std::vector<double> b_, a_;   // descending-delay difference equation taps
  std::vector<double> u_hist_, y_hist_;
  size_t pos_ = 0;
};

/// Filters `input` through `tf` (zero initial conditions).
std::vector<double> tf_simulate(const RationalTF& tf, std::span<const double> input);

/// Simulates a state-space model from zero initial state (SISO path).
std::vector<double> ss_simulate(const StateSpaceModel& ss, std::span<const double> input);

enum class Combine { series, parallel, feedback };

/// Raw polynomial composition: series a*b, parallel a+b, feedback a/(1-ab)
/// (positive feedback; pass a sign-flipped b for negative feedback).
RationalTF tf_combine(Combine op, const RationalTF& a, const RationalTF& b);

/// Explicit pole/zero cancellation by root pairing within `tol`.
RationalTF reduce(const RationalTF& tf, double tol = 1e-8);

/// Removes the common z^k factor shared by num and den (exact structural
/// cancellation of origin poles/zeros only).
RationalTF strip_common_z(const RationalTF& tf);

struct FrequencyResponse {
  std::vector<double> omegas;              // strictly increasing, in [0, pi]
  std::vector<Eigen::MatrixXcd> values;    // one p x m value per frequency

  FrequencyResponse() = default;
  FrequencyResponse(std::vector<double> om, std::vector<Eigen::MatrixXcd> val);
  size_t size() const { return omegas.size(); }
};

/// Samples tf at z = e^{j omega} over the given frequencies.
FrequencyResponse sample_freq_response(const RationalTF& tf, std::span<const double> omegas);

/// State matrix of the positive-feedback interconnection ubar = K y,
/// y = G ubar. Throws IllPosedInterconnection when I - D_k D_g is singular.
Eigen::MatrixXd closed_loop_matrix(const StateSpaceModel& g, const StateSpaceModel& k);

} // namespace dslp
