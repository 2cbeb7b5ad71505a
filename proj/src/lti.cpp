#include "dslp/lti.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace dslp {

namespace {

void sort_complex(std::vector<Complex>& v) {
  std::sort(v.begin(), v.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
}

// Parlett-Reinsch style balancing; scales by powers of 2 so no rounding is
// introduced.
void balance_companion(Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  const double gamma = 0.9;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      const double row_norm = m.row(i).lpNorm<1>();
      const double col_norm = m.col(i).lpNorm<1>();
      if (row_norm == 0.0 || col_norm == 0.0) continue;
      int exponent = 0;
      std::frexp(row_norm / col_norm, &exponent);
      exponent /= 2;
      if (exponent != 0) {
        const double scaled_col = std::ldexp(col_norm, exponent);
        const double scaled_row = std::ldexp(row_norm, -exponent);
        if (scaled_col + scaled_row < gamma * (col_norm + row_norm)) {
          changed = true;
          m.row(i) *= std::ldexp(1.0, -exponent);
          m.col(i) *= std::ldexp(1.0, exponent);
        }
      }
    }
  }
}

} // namespace

// ---------------------------------------------------------------- Polynomial

void Polynomial::trim() {
  while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

Polynomial Polynomial::shift(int k) {
  std::vector<double> c(static_cast<size_t>(k) + 1, 0.0);
  c.back() = 1.0;
  return Polynomial(std::move(c));
}

Complex Polynomial::eval(Complex z) const {
  Complex acc(0.0, 0.0);
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * z + *it;
  return acc;
}

double Polynomial::eval(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double Polynomial::max_abs_coeff() const {
  double m = 0.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

Polynomial operator+(const Polynomial& p, const Polynomial& q) {
  std::vector<double> c(std::max(p.coeffs_.size(), q.coeffs_.size()), 0.0);
  for (size_t i = 0; i < p.coeffs_.size(); ++i) c[i] += p.coeffs_[i];
  for (size_t i = 0; i < q.coeffs_.size(); ++i) c[i] += q.coeffs_[i];
  return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& p, const Polynomial& q) {
  std::vector<double> c(std::max(p.coeffs_.size(), q.coeffs_.size()), 0.0);
  for (size_t i = 0; i < p.coeffs_.size(); ++i) c[i] += p.coeffs_[i];
  for (size_t i = 0; i < q.coeffs_.size(); ++i) c[i] -= q.coeffs_[i];
  return Polynomial(std::move(c));
}

Polynomial operator*(const Polynomial& p, const Polynomial& q) {
  if (p.is_zero() || q.is_zero()) return Polynomial::zero();
  std::vector<double> c(p.coeffs_.size() + q.coeffs_.size() - 1, 0.0);
  for (size_t i = 0; i < p.coeffs_.size(); ++i)
    for (size_t j = 0; j < q.coeffs_.size(); ++j) c[i + j] += p.coeffs_[i] * q.coeffs_[j];
  return Polynomial(std::move(c));
}

Polynomial operator*(double s, const Polynomial& p) {
  std::vector<double> c = p.coeffs_;
  for (double& x : c) x *= s;
  return Polynomial(std::move(c));
}

Polynomial poly_mul(const Polynomial& p, const Polynomial& q) { return p * q; }

std::vector<Complex> poly_roots(const Polynomial& p) {
  if (p.is_zero()) throw ZeroPolynomial("poly_roots: zero polynomial has no defined roots");
  const int n = p.degree();
  if (n == 0) throw ConstantPolynomial("poly_roots: constant polynomial has no roots");
  if (n == 1) return {Complex(-p.coeff(0) / p.coeff(1), 0.0)};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  const double lead = p.leading();
  for (int i = 0; i < n - 1; ++i) companion(i + 1, i) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -p.coeff(i) / lead;
  balance_companion(companion);

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw Error("poly_roots: eigenvalue iteration failed");
  std::vector<Complex> roots(n);
  for (int i = 0; i < n; ++i) roots[i] = solver.eigenvalues()(i);
  sort_complex(roots);
  return roots;
}

Polynomial poly_from_roots(std::span<const Complex> roots, double leading) {
  std::vector<Complex> c{Complex(leading, 0.0)};
  for (const Complex& r : roots) {
    std::vector<Complex> next(c.size() + 1, Complex(0.0, 0.0));
    for (size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= c[i] * r;
    }
    c = std::move(next);
  }
  std::vector<double> re(c.size());
  for (size_t i = 0; i < c.size(); ++i) re[i] = c[i].real();
  return Polynomial(std::move(re));
}

// ---------------------------------------------------------------- RationalTF

RationalTF::RationalTF(Polynomial n, Polynomial d) : num(std::move(n)), den(std::move(d)) {
  if (den.is_zero()) throw ZeroPolynomial("RationalTF: denominator is the zero polynomial");
}

double RationalTF::at_infinity() const {
  if (num.degree() > den.degree())
    throw ImproperTransferFunction("at_infinity: improper transfer function");
  if (num.degree() < den.degree()) return 0.0;
  return num.leading() / den.leading();
}

Complex tf_eval(const RationalTF& tf, Complex z) {
  const Complex dv = tf.den.eval(z);
  const double scale = std::max(tf.den.max_abs_coeff(), 1.0);
  if (std::abs(dv) < 1e-12 * scale)
    throw PoleOnEvaluationPoint("tf_eval: denominator vanishes at evaluation point");
  return tf.num.eval(z) / dv;
}

StabilityReport tf_is_stable(const RationalTF& tf) {
  StabilityReport report;
  constexpr double kTol = 1e-9;
  if (tf.den.degree() < 1) {
    report.stable = true;
    return report;
  }
  report.poles = poly_roots(tf.den);
  report.moduli.reserve(report.poles.size());
  for (const Complex& p : report.poles) {
    report.moduli.push_back(std::abs(p));
    report.max_modulus = std::max(report.max_modulus, report.moduli.back());
  }
  report.stable = report.max_modulus < 1.0 - kTol;
  return report;
}

// ------------------------------------------------------------ StateSpaceModel

StateSpaceModel::StateSpaceModel(Eigen::MatrixXd A_, Eigen::MatrixXd B_,
                                 Eigen::MatrixXd C_, Eigen::MatrixXd D_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)) {
  if (A.rows() != A.cols()) throw DimensionMismatch("StateSpaceModel: A not square");
  if (B.rows() != A.rows()) throw DimensionMismatch("StateSpaceModel: B row count");
  if (C.cols() != A.cols()) throw DimensionMismatch("StateSpaceModel: C column count");
  if (D.rows() != C.rows() || D.cols() != B.cols())
    throw DimensionMismatch("StateSpaceModel: D dimensions");
}

StateSpaceModel tf_to_ss(const RationalTF& tf) {
  if (!tf.is_proper())
    throw ImproperTransferFunction("tf_to_ss: deg(num) > deg(den)");
  const int n = tf.den.degree();
  const double lead = tf.den.leading();

  // Monic denominator z^n + a_{n-1} z^{n-1} + ... + a_0 and numerator padded
  // to degree n; D is the leading coefficient ratio.
  std::vector<double> a(n), b(n + 1, 0.0);
  for (int i = 0; i < n; ++i) a[i] = tf.den.coeff(i) / lead;
  for (int i = 0; i <= tf.num.degree(); ++i) b[i] = tf.num.coeff(i) / lead;
  const double d = b[n];

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 1);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(1, n);
  for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  for (int i = 0; i < n; ++i) A(n - 1, i) = -a[i];
  if (n > 0) B(n - 1, 0) = 1.0;
  for (int i = 0; i < n; ++i) C(0, i) = b[i] - d * a[i];
  Eigen::MatrixXd D(1, 1);
  D(0, 0) = d;
  StateSpaceModel ss(A, B, C, D);

  // Reconstruction check at 16 fixed points on |z| = 2 (outside the pole
  // region of everything this library realizes).
  if (n > 0) {
    for (int point = 0; point < 16; ++point) {
      const Complex z = std::polar(2.0, (point + 0.5) * 0.19634954084936207);
      const Complex dv = tf.den.eval(z);
      if (std::abs(dv) < 1e-9 * std::max(tf.den.max_abs_coeff(), 1.0)) continue;
      const Complex direct = tf.num.eval(z) / dv;
      Eigen::MatrixXcd zi = z * Eigen::MatrixXcd::Identity(n, n) - A.cast<Complex>();
      const Complex via_ss =
          (C.cast<Complex>() * zi.partialPivLu().solve(B.cast<Complex>()))(0) + d;
      if (std::abs(via_ss - direct) > 1e-9 * std::max(1.0, std::abs(direct)))
        throw Error("tf_to_ss: realization failed the reconstruction check");
    }
  }
  return ss;
}

std::vector<Complex> ss_eigenvalues(const StateSpaceModel& ss) {
  const int n = ss.state_dim();
  std::vector<Complex> ev(n);
  if (n == 0) return ev;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(ss.A, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw Error("ss_eigenvalues: eigenvalue iteration failed");
  for (int i = 0; i < n; ++i) ev[i] = solver.eigenvalues()(i);
  sort_complex(ev);
  return ev;
}

// -------------------------------------------------------------------- filter

TfFilter::TfFilter(const RationalTF& tf) {
  if (!tf.is_proper())
    throw ImproperTransferFunction("TfFilter: improper transfer function");
  const int n = tf.den.degree();
  const double lead = tf.den.leading();
  // y[t] = sum_i b[i] u[t-(n-i)] - sum_{i<n} a[i] y[t-(n-i)], coefficient of
  // z^i keeps its own power.
  b_.assign(n + 1, 0.0);
  a_.assign(n + 1, 0.0);
  for (int i = 0; i <= tf.num.degree(); ++i) b_[i] = tf.num.coeff(i) / lead;
  for (int i = 0; i <= n; ++i) a_[i] = tf.den.coeff(i) / lead;
  u_hist_.assign(n + 1, 0.0);
  y_hist_.assign(n + 1, 0.0);
}

void TfFilter::reset() {
  std::fill(u_hist_.begin(), u_hist_.end(), 0.0);
  std::fill(y_hist_.begin(), y_hist_.end(), 0.0);
  pos_ = 0;
}

double TfFilter::step(double u) {
  const size_t n = a_.size() - 1;
  u_hist_[pos_ % (n + 1)] = u;
  double acc = 0.0;
  for (size_t i = 0; i <= n; ++i) {
    const size_t delay = n - i;
    if (pos_ >= delay) acc += b_[i] * u_hist_[(pos_ - delay) % (n + 1)];
  }
  for (size_t i = 0; i < n; ++i) {
    const size_t delay = n - i;
    if (pos_ >= delay) acc -= a_[i] * y_hist_[(pos_ - delay) % (n + 1)];
  }
  y_hist_[pos_ % (n + 1)] = acc;
  ++pos_;
  return acc;
}

std::vector<double> tf_simulate(const RationalTF& tf, std::span<const double> input) {
  TfFilter filter(tf);
  std::vector<double> out(input.size());
  for (size_t t = 0; t < input.size(); ++t) out[t] = filter.step(input[t]);
  return out;
}

std::vector<double> ss_simulate(const StateSpaceModel& ss, std::span<const double> input) {
  if (ss.input_dim() != 1 || ss.output_dim() != 1)
    throw DimensionMismatch("ss_simulate: SISO models only");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(ss.state_dim());
  std::vector<double> out(input.size());
  for (size_t t = 0; t < input.size(); ++t) {
    out[t] = (ss.C * x)(0) + ss.D(0, 0) * input[t];
    x = ss.A * x + ss.B * input[t];
  }
  return out;
}

// ------------------------------------------------------------------- combine

RationalTF tf_combine(Combine op, const RationalTF& a, const RationalTF& b) {
  switch (op) {
    case Combine::series:
      return {a.num * b.num, a.den * b.den};
    case Combine::parallel:
      return {a.num * b.den + b.num * a.den, a.den * b.den};
    case Combine::feedback: {
      // a / (1 - a b) = (num_a den_b) / (den_a den_b - num_a num_b)
      Polynomial den = a.den * b.den - a.num * b.num;
      if (den.is_zero())
        throw AlgebraicLoop("tf_combine: feedback denominator vanished");
      RationalTF result{a.num * b.den, den};
      if (a.is_proper() && b.is_proper() && !result.is_proper())
        throw AlgebraicLoop("tf_combine: non-well-posed feedback loop (1 - a(inf)b(inf) = 0)");
      return result;
    }
  }
  throw Error("tf_combine: unknown op");
}

RationalTF reduce(const RationalTF& tf_in, double tol) {
  // Shared z^k factors cancel exactly before root pairing (clusters of
  // roots at the origin would otherwise defeat the pairing tolerance).
  const RationalTF tf = strip_common_z(tf_in);
  if (tf.num.is_zero() || tf.num.degree() < 1 || tf.den.degree() < 1) return tf;
  std::vector<Complex> zeros = poly_roots(tf.num);
  std::vector<Complex> poles = poly_roots(tf.den);
  std::vector<bool> pole_used(poles.size(), false);
  std::vector<Complex> kept_zeros;
  for (const Complex& z : zeros) {
    bool cancelled = false;
    for (size_t i = 0; i < poles.size(); ++i) {
      if (!pole_used[i] && std::abs(z - poles[i]) <= tol) {
        pole_used[i] = true;
        cancelled = true;
        break;
      }
    }
    if (!cancelled) kept_zeros.push_back(z);
  }
  std::vector<Complex> kept_poles;
  for (size_t i = 0; i < poles.size(); ++i)
    if (!pole_used[i]) kept_poles.push_back(poles[i]);
  return {poly_from_roots(kept_zeros, tf.num.leading()),
          poly_from_roots(kept_poles, tf.den.leading())};
}

RationalTF strip_common_z(const RationalTF& tf) {
  if (tf.num.is_zero()) return tf;
  auto low_order = [](const Polynomial& p) {
    int k = 0;
    while (p.coeff(k) == 0.0 && k < p.degree()) ++k;
    return k;
  };
  const int k = std::min(low_order(tf.num), low_order(tf.den));
  if (k == 0) return tf;
  auto drop = [k](const Polynomial& p) {
    std::vector<double> c(p.coeffs().begin() + k, p.coeffs().end());
    return Polynomial(std::move(c));
  };
  return {drop(tf.num), drop(tf.den)};
}

// -------------------------------------------------------- FrequencyResponse

FrequencyResponse::FrequencyResponse(std::vector<double> om,
                                     std::vector<Eigen::MatrixXcd> val)
    : omegas(std::move(om)), values(std::move(val)) {
  if (omegas.size() != values.size())
    throw DimensionMismatch("FrequencyResponse: omegas/values length mismatch");
  for (size_t i = 1; i < omegas.size(); ++i)
    if (omegas[i] <= omegas[i - 1])
      throw DimensionMismatch("FrequencyResponse: omegas not strictly increasing");
}

FrequencyResponse sample_freq_response(const RationalTF& tf,
                                       std::span<const double> omegas) {
  std::vector<double> om(omegas.begin(), omegas.end());
  std::vector<Eigen::MatrixXcd> values;
  values.reserve(om.size());
  for (double w : om) {
    Eigen::MatrixXcd v(1, 1);
    v(0, 0) = tf_eval(tf, std::polar(1.0, w));
    values.push_back(std::move(v));
  }
  return FrequencyResponse(std::move(om), std::move(values));
}

// ------------------------------------------------------------ interconnection

Eigen::MatrixXd closed_loop_matrix(const StateSpaceModel& g, const StateSpaceModel& k) {
  if (g.input_dim() != k.output_dim() || g.output_dim() != k.input_dim())
    throw DimensionMismatch("closed_loop_matrix: plant/controller port mismatch");
  const int ng = g.state_dim();
  const int nk = k.state_dim();
  const int m = g.input_dim();

  // ubar = C_k x_k + D_k y, y = C_g x_g + D_g ubar
  Eigen::MatrixXd delta = Eigen::MatrixXd::Identity(m, m) - k.D * g.D;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(delta);
  if (!lu.isInvertible())
    throw IllPosedInterconnection("closed_loop_matrix: I - D_k D_g singular");
  Eigen::MatrixXd ubar_xg = lu.solve(k.D * g.C);
  Eigen::MatrixXd ubar_xk = lu.solve(k.C);

  Eigen::MatrixXd y_xg = g.C + g.D * ubar_xg;
  Eigen::MatrixXd y_xk = g.D * ubar_xk;

  Eigen::MatrixXd acl(ng + nk, ng + nk);
  acl.topLeftCorner(ng, ng) = g.A + g.B * ubar_xg;
  acl.topRightCorner(ng, nk) = g.B * ubar_xk;
  acl.bottomLeftCorner(nk, ng) = k.B * y_xg;
  acl.bottomRightCorner(nk, nk) = k.A + k.B * y_xk;
  return acl;
}

} // namespace dslp
