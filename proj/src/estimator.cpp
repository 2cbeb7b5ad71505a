#include "dslp/estimator.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "json.hpp"

namespace dslp {

namespace {

constexpr double kRankTol = 1e-10;       // null-space cutoff, relative
constexpr double kConditionGuard = 1e12; // R(e^{jw}) inversion guard

Eigen::MatrixXcd guarded_inverse(const Eigen::MatrixXcd& m, double omega,
                                 const char* what) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > kConditionGuard)
    throw SingularRk(std::string(what) + " singular at omega = " + std::to_string(omega) +
                     " (condition ~ " +
                     std::to_string(sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                                            : std::numeric_limits<double>::infinity()) +
                     ")");
  return svd.solve(Eigen::MatrixXcd::Identity(m.rows(), m.cols()));
}

} // namespace

std::string DualSlsEstimate::to_json() const {
  nlohmann::json j{
      {"params", nlohmann::json::parse(params.to_json())},
      {"fit_residual", fit_residual},
      {"constraint_residual", constraint_residual},
      {"regressor_rank_deficient", regressor_rank_deficient},
      {"null_dim", null_dim},
      {"controller",
       {{"n", controller.state_dim()},
        {"inputs", controller.input_dim()},
        {"outputs", controller.output_dim()},
        {"D_k", std::vector<double>(D_k.data(), D_k.data() + D_k.size())}}},
  };
  return j.dump(2);
}

DualSlsEstimate estimate_dual_params(const LoopDataset& dataset,
                                     const StateSpaceModel& controller, int horizon) {
  if (horizon < 1) throw Error("estimate_dual_params: horizon must be >= 1");
  if (dataset.y.size() != dataset.r.size())
    throw LengthMismatch("estimate_dual_params: y and r lengths differ");
  if (dataset.y.size() <= static_cast<size_t>(horizon))
    throw Error("estimate_dual_params: dataset shorter than horizon + 1");
  if (controller.input_dim() != 1 || controller.output_dim() != 1)
    throw DimensionMismatch("estimate_dual_params: scalar-loop controller expected");

  DualSlsEstimate estimate;
  estimate.D_k = controller.D;
  estimate.controller =
      StateSpaceModel(controller.A, controller.B, controller.C,
                      Eigen::MatrixXd::Zero(controller.output_dim(), controller.input_dim()));

  const AffineSystem sys = build_affine_constraints(controller.A, controller.B,
                                                    controller.C, horizon);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(sys.E);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Eigen::VectorXd theta_p = svd.solve(sys.f);
  const double part_residual = (dense * theta_p - sys.f).norm();
  if (part_residual > 1e-8 * (1.0 + sys.f.norm()))
    throw InfeasibleConstraints(
        "estimate_dual_params: no FIR parameters satisfy the subspace at this horizon "
        "(residual " + std::to_string(part_residual) + ")");

  int rank = 0;
  const double cutoff = kRankTol * svd.singularValues()(0);
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > cutoff) ++rank;
  const int null_dim = sys.num_unknowns() - rank;
  estimate.null_dim = null_dim;

  const Eigen::MatrixXd phi = toeplitz_regressor(dataset.r, horizon);
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(dataset.y.samples.data(),
                                        static_cast<Eigen::Index>(dataset.y.size()));

  Eigen::VectorXd theta = theta_p;
  if (null_dim > 0) {
    const Eigen::MatrixXd z_basis = svd.matrixV().rightCols(null_dim);
    // The objective touches only the L taps.
    const Eigen::MatrixXd lz = z_basis.middleRows(sys.offset_L, horizon + 1);
    const Eigen::VectorXd lp = theta_p.segment(sys.offset_L, horizon + 1);
    const Eigen::MatrixXd reduced = phi * lz;
    const Eigen::VectorXd rhs = y - phi * lp;
    Eigen::BDCSVD<Eigen::MatrixXd> ls(reduced, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd w = ls.solve(rhs);  // minimum-norm on rank deficiency
    estimate.regressor_rank_deficient = ls.rank() < reduced.cols();
    theta += z_basis * w;
  }

  estimate.params = sys.unpack(theta);
  estimate.fit_residual =
      (y - phi * theta.segment(sys.offset_L, horizon + 1)).norm();
  estimate.constraint_residual = (sys.E * theta - sys.f).cwiseAbs().maxCoeff();
  return estimate;
}

FrequencyResponse recover_plant_freqresp(const DualSlsEstimate& estimate,
                                         std::span<const double> omegas) {
  const FirParams& p = estimate.params;
  const bool has_feedthrough = !estimate.D_k.isZero(0.0);

  std::vector<double> om(omegas.begin(), omegas.end());
  std::vector<Eigen::MatrixXcd> values;
  values.reserve(om.size());
  for (double w : om) {
    const Complex z = std::polar(1.0, w);
    const Eigen::MatrixXcd r_inv = guarded_inverse(p.eval_R(z), w, "R(e^{jw})");
    Eigen::MatrixXcd g_check = p.eval_L(z) - p.eval_M(z) * r_inv * p.eval_N(z);
    if (has_feedthrough) {
      const Eigen::MatrixXcd corr =
          Eigen::MatrixXcd::Identity(estimate.D_k.rows(), estimate.D_k.rows()) +
          estimate.D_k * g_check;
      Eigen::FullPivLU<Eigen::MatrixXcd> lu(corr);
      if (!lu.isInvertible())
        throw SingularCorrection("recover_plant_freqresp: I + D_k G singular at omega = " +
                                 std::to_string(w));
      g_check = g_check * lu.inverse();
    }
    values.push_back(std::move(g_check));
  }
  return FrequencyResponse(std::move(om), std::move(values));
}

StateSpaceModel realize_plant_ss(const DualSlsEstimate& estimate) {
  const FirParams& p = estimate.params;
  if (estimate.constraint_residual > 1e-6)
    throw Error("realize_plant_ss: constraint residual too large for realization");
  const int n = p.n();
  const int q = p.q();
  const int s = p.s();
  const int T = p.horizon;

  // State stacks zeta[t..t-T] (n each) and u[t-1..t-T] (q each):
  //   zeta[t+1] = sum_{i=0}^{T-1} (-R[i+2]) zeta[t-i] + sum_{i=0}^{T} N[i+1] u[t-i]
  //   ybar[t]   = sum_{i=0}^{T} L[i] u[t-i] - sum_{i=0}^{T} M[i+1] zeta[t-i]
  // which realizes Gcheck = L - M R^{-1} N through z(I - zR), zM, zN.
  const int nz = n * (T + 1);
  const int nu = q * T;
  const int nx = nz + nu;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nx, nx);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nx, q);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(s, nx);
  Eigen::MatrixXd D = p.L[0];

  auto zeta_at = [&](int i) { return i * n; };          // zeta[t-i]
  auto u_at = [&](int i) { return nz + (i - 1) * q; };  // u[t-i], i >= 1

  for (int i = 0; i < T; ++i)
    A.block(zeta_at(0), zeta_at(i), n, n) = -p.R[static_cast<size_t>(i) + 1];
  for (int i = 1; i <= T; ++i)
    A.block(zeta_at(0), u_at(i), n, q) = p.N[static_cast<size_t>(i)];
  B.block(zeta_at(0), 0, n, q) = p.N[0];
  for (int i = 1; i <= T; ++i)
    A.block(zeta_at(i), zeta_at(i - 1), n, n) = Eigen::MatrixXd::Identity(n, n);
  for (int i = 2; i <= T; ++i)
    A.block(u_at(i), u_at(i - 1), q, q) = Eigen::MatrixXd::Identity(q, q);
  if (T >= 1) B.block(u_at(1), 0, q, q) = Eigen::MatrixXd::Identity(q, q);

  for (int i = 0; i <= T; ++i)
    C.block(0, zeta_at(i), s, n) = -p.M[static_cast<size_t>(i)];
  for (int i = 1; i <= T; ++i)
    C.block(0, u_at(i), s, q) = p.L[static_cast<size_t>(i)];

  StateSpaceModel g_check(A, B, C, D);
  if (estimate.D_k.isZero(0.0)) return g_check;

  // Output feedback for the feedthrough correction:
  //   ybar = Gcheck u, u = v - D_k ybar  =>  v -> ybar realizes
  //   Gcheck (I + D_k Gcheck)^{-1}.
  const Eigen::MatrixXd gamma =
      Eigen::MatrixXd::Identity(g_check.D.rows(), g_check.D.rows()) +
      g_check.D * estimate.D_k;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gamma);
  if (!lu.isInvertible())
    throw IllPosedRealization("realize_plant_ss: I + Gcheck(inf) D_k singular");
  const Eigen::MatrixXd gamma_inv = lu.inverse();
  const Eigen::MatrixXd c2 = gamma_inv * g_check.C;
  const Eigen::MatrixXd d2 = gamma_inv * g_check.D;
  const Eigen::MatrixXd a2 = g_check.A - g_check.B * estimate.D_k * c2;
  const Eigen::MatrixXd b2 = g_check.B * (Eigen::MatrixXd::Identity(q, q) -
                                          estimate.D_k * d2);
  return StateSpaceModel(a2, b2, c2, d2);
}

StateSpaceModel transform_realization(const StateSpaceModel& ss,
                                      const Eigen::MatrixXd& tbar) {
  if (tbar.rows() != tbar.cols() || tbar.rows() != ss.A.rows())
    throw DimensionMismatch("transform_realization: Tbar size mismatch");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(tbar, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 1e12)
    throw SingularTransform("transform_realization: Tbar numerically singular (condition " +
                            std::to_string(sv(sv.size() - 1) > 0.0
                                               ? sv(0) / sv(sv.size() - 1)
                                               : std::numeric_limits<double>::infinity()) +
                            ")");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(tbar);
  const Eigen::MatrixXd tinv = lu.inverse();
  return StateSpaceModel(tinv * ss.A * tbar, tinv * ss.B, ss.C * tbar, ss.D);
}

FirParams expected_param_transform(const FirParams& params, const Eigen::MatrixXd& tbar) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(tbar);
  if (!lu.isInvertible())
    throw SingularTransform("expected_param_transform: Tbar singular");
  const Eigen::MatrixXd tinv = lu.inverse();
  FirParams out = params;
  for (auto& tap : out.R) tap = tbar * tap * tinv;
  for (auto& tap : out.M) tap = tap * tinv;
  for (auto& tap : out.N) tap = tbar * tap;
  return out;
}

} // namespace dslp
