#include "dslp/baselines.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "dslp/signals.hpp"

namespace dslp {

namespace {

/// FIR taps 0..horizon minimizing ||target - Phi(reg) taps||.
std::pair<std::vector<double>, double> fir_least_squares(const Signal& reg,
                                                         const Signal& target,
                                                         int horizon) {
  const Eigen::MatrixXd phi = toeplitz_regressor(reg, horizon);
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(
      target.samples.data(), static_cast<Eigen::Index>(target.size()));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd taps = svd.solve(b);
  if (svd.rank() < phi.cols())
    throw RankDeficientRegressor("fir_least_squares: regressor numerically rank-deficient");
  const double residual = (b - phi * taps).norm();
  return {std::vector<double>(taps.data(), taps.data() + taps.size()), residual};
}

/// FIR taps as a rational: (sum_i taps[i] z^{T-i}) / z^T.
RationalTF fir_to_tf(const std::vector<double>& taps) {
  const int T = static_cast<int>(taps.size()) - 1;
  std::vector<double> num(taps.size());
  for (int i = 0; i <= T; ++i) num[T - i] = taps[static_cast<size_t>(i)];
  return {Polynomial(std::move(num)), Polynomial::shift(T)};
}

/// Zeros of D0 Y0 - N0 X0 are the closed-loop poles of (G0, K); the nominal
/// is stabilized iff they all lie strictly inside the unit disk.
StabilityReport nominal_loop_roots(const CoprimeFactors& g0, const CoprimeFactors& k) {
  const RationalTF lambda =
      tf_combine(Combine::parallel, tf_combine(Combine::series, g0.den_factor, k.den_factor),
                 RationalTF{-1.0 * (g0.num_factor.num * k.num_factor.num),
                            g0.num_factor.den * k.num_factor.den});
  return tf_is_stable(RationalTF{Polynomial::one(), lambda.num});
}

} // namespace

RationalTF CoprimeFactors::ratio() const {
  return {num_factor.num * den_factor.den, num_factor.den * den_factor.num};
}

CoprimeFactors coprime_factorize(const RationalTF& tf, std::string subject) {
  if (!tf.is_proper())
    throw ImproperTransferFunction("coprime_factorize: improper transfer function");
  const int d = tf.den.degree();
  const Polynomial zd = Polynomial::shift(d);
  return {RationalTF{tf.num, zd}, RationalTF{tf.den, zd}, std::move(subject)};
}

BaselineEstimate dual_youla_estimate(const LoopDataset& dataset,
                                     const CoprimeFactors& k_factors,
                                     const CoprimeFactors& g0_factors, int horizon,
                                     bool require_stabilized_nominal) {
  const StabilityReport loop = nominal_loop_roots(g0_factors, k_factors);
  if (!loop.stable && require_stabilized_nominal)
    throw NominalNotStabilized(
        "dual_youla_estimate: nominal plant is not stabilized by the loop controller "
        "(max closed-loop pole modulus " + std::to_string(loop.max_modulus) + ")");

  const Signal beta(
      [&] {
        std::vector<double> d0y = tf_simulate(g0_factors.den_factor, dataset.y.samples);
        const std::vector<double> n0u =
            tf_simulate(g0_factors.num_factor, dataset.ubar.samples);
        for (size_t t = 0; t < d0y.size(); ++t) d0y[t] -= n0u[t];
        return d0y;
      }(),
      "beta");
  const Signal alpha(tf_simulate(k_factors.den_factor, dataset.r.samples), "alpha");

  BaselineEstimate estimate;
  estimate.nominal_stabilized = loop.stable;
  auto [taps, residual] = fir_least_squares(alpha, beta, horizon);
  estimate.taps = taps;
  estimate.fit_residual = residual;

  const RationalTF r_hat = fir_to_tf(taps);
  const RationalTF num = tf_combine(Combine::parallel, g0_factors.num_factor,
                                    tf_combine(Combine::series, r_hat, k_factors.den_factor));
  const RationalTF den = tf_combine(Combine::parallel, g0_factors.den_factor,
                                    tf_combine(Combine::series, r_hat, k_factors.num_factor));
  estimate.plant = strip_common_z(RationalTF{num.num * den.den, num.den * den.num});
  return estimate;
}

BaselineEstimate coprime_estimate(const LoopDataset& dataset, const RationalTF& k,
                                  const CoprimeFactors& g0_factors, int horizon) {
  // x = (D0 - K N0)^{-1} r; the inverse filter must be stable and proper.
  const RationalTF w = tf_combine(
      Combine::parallel, g0_factors.den_factor,
      RationalTF{-1.0 * (k.num * g0_factors.num_factor.num),
                 k.den * g0_factors.num_factor.den});
  const RationalTF w_inv = strip_common_z(RationalTF{w.den, w.num});
  if (!w_inv.is_proper())
    throw UnstableFilter("coprime_estimate: (D0 - K N0)^{-1} is improper (ill-posed)");
  const StabilityReport inv_stab = tf_is_stable(w_inv);
  if (!inv_stab.stable)
    throw UnstableFilter(
        "coprime_estimate: (D0 - K N0)^{-1} is unstable (max pole modulus " +
        std::to_string(inv_stab.max_modulus) + ")");

  const Signal x(tf_simulate(w_inv, dataset.r.samples), "x");
  auto [n_taps, n_residual] = fir_least_squares(x, dataset.y, horizon);
  auto [d_taps, d_residual] = fir_least_squares(x, dataset.ubar, horizon);

  BaselineEstimate estimate;
  estimate.taps = n_taps;
  estimate.taps.insert(estimate.taps.end(), d_taps.begin(), d_taps.end());
  estimate.fit_residual = std::hypot(n_residual, d_residual);

  // N/D: the z^T scalings cancel exactly.
  const RationalTF n_hat = fir_to_tf(n_taps);
  const RationalTF d_hat = fir_to_tf(d_taps);
  estimate.plant = strip_common_z(RationalTF{n_hat.num, d_hat.num});
  return estimate;
}

} // namespace dslp
