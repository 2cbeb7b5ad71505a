#include "dslp/sls_subspace.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "json.hpp"

namespace dslp {

namespace {

// Rank threshold relative to the largest singular value. The constraint
// matrices here have exact rank structure (integer-like entries), so a firm
// cutoff is appropriate.
constexpr double kRankTol = 1e-10;

Eigen::MatrixXcd eval_taps(const std::vector<Eigen::MatrixXd>& taps, int first_delay,
                           Complex z) {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(taps[0].rows(), taps[0].cols());
  for (size_t i = 0; i < taps.size(); ++i)
    acc += taps[i] * std::pow(z, -static_cast<double>(first_delay + static_cast<int>(i)));
  return acc;
}

nlohmann::json taps_to_json(const std::vector<Eigen::MatrixXd>& taps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : taps) {
    nlohmann::json tap = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) tap.push_back(m(i, j));
    arr.push_back(std::move(tap));
  }
  return arr;
}

std::vector<Eigen::MatrixXd> taps_from_json(const nlohmann::json& arr, int rows, int cols) {
  std::vector<Eigen::MatrixXd> taps;
  for (const auto& tap : arr) {
    Eigen::MatrixXd m(rows, cols);
    int k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = tap.at(k++).get<double>();
    taps.push_back(std::move(m));
  }
  return taps;
}

} // namespace

FirParams FirParams::zeros(int n, int q, int s, int horizon) {
  FirParams p;
  p.horizon = horizon;
  p.R.assign(horizon + 1, Eigen::MatrixXd::Zero(n, n));
  p.M.assign(horizon + 1, Eigen::MatrixXd::Zero(q, n));
  p.N.assign(horizon + 1, Eigen::MatrixXd::Zero(n, s));
  p.L.assign(horizon + 1, Eigen::MatrixXd::Zero(q, s));
  return p;
}

Eigen::MatrixXcd FirParams::eval_R(Complex z) const { return eval_taps(R, 1, z); }
Eigen::MatrixXcd FirParams::eval_M(Complex z) const { return eval_taps(M, 1, z); }
Eigen::MatrixXcd FirParams::eval_N(Complex z) const { return eval_taps(N, 1, z); }
Eigen::MatrixXcd FirParams::eval_L(Complex z) const { return eval_taps(L, 0, z); }

std::string FirParams::to_json() const {
  nlohmann::json j{{"horizon", horizon},
                   {"n", n()},
                   {"q", q()},
                   {"s", s()},
                   {"R", taps_to_json(R)},
                   {"M", taps_to_json(M)},
                   {"N", taps_to_json(N)},
                   {"L", taps_to_json(L)}};
  return j.dump(2);
}

FirParams FirParams::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  const int n = j.at("n").get<int>();
  const int q = j.at("q").get<int>();
  const int s = j.at("s").get<int>();
  FirParams p;
  p.horizon = j.at("horizon").get<int>();
  p.R = taps_from_json(j.at("R"), n, n);
  p.M = taps_from_json(j.at("M"), q, n);
  p.N = taps_from_json(j.at("N"), n, s);
  p.L = taps_from_json(j.at("L"), q, s);
  return p;
}

int AffineSystem::index_of(TapBlock block, int delay, int row, int col) const {
  switch (block) {
    case TapBlock::R:
      return offset_R + (delay - 1) * n * n + row * n + col;
    case TapBlock::M:
      return offset_M + (delay - 1) * q * n + row * n + col;
    case TapBlock::N:
      return offset_N + (delay - 1) * n * s + row * s + col;
    case TapBlock::L:
      return offset_L + delay * q * s + row * s + col;
  }
  throw Error("AffineSystem::index_of: unknown block");
}

Eigen::VectorXd AffineSystem::pack(const FirParams& params) const {
  if (params.horizon != horizon || params.n() != n || params.q() != q || params.s() != s)
    throw DimensionMismatch("AffineSystem::pack: params do not match the layout");
  Eigen::VectorXd theta(num_unknowns());
  for (int k = 0; k < num_unknowns(); ++k) {
    const TapCoord& c = layout[k];
    switch (c.block) {
      case TapBlock::R: theta(k) = params.R[c.delay - 1](c.row, c.col); break;
      case TapBlock::M: theta(k) = params.M[c.delay - 1](c.row, c.col); break;
      case TapBlock::N: theta(k) = params.N[c.delay - 1](c.row, c.col); break;
      case TapBlock::L: theta(k) = params.L[c.delay](c.row, c.col); break;
    }
  }
  return theta;
}

FirParams AffineSystem::unpack(const Eigen::VectorXd& theta) const {
  if (theta.size() != num_unknowns())
    throw DimensionMismatch("AffineSystem::unpack: theta length mismatch");
  FirParams params = FirParams::zeros(n, q, s, horizon);
  for (int k = 0; k < num_unknowns(); ++k) {
    const TapCoord& c = layout[k];
    switch (c.block) {
      case TapBlock::R: params.R[c.delay - 1](c.row, c.col) = theta(k); break;
      case TapBlock::M: params.M[c.delay - 1](c.row, c.col) = theta(k); break;
      case TapBlock::N: params.N[c.delay - 1](c.row, c.col) = theta(k); break;
      case TapBlock::L: params.L[c.delay](c.row, c.col) = theta(k); break;
    }
  }
  return params;
}

AffineSystem build_affine_constraints(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                      const Eigen::MatrixXd& C, int horizon) {
  if (A.rows() != A.cols()) throw DimensionMismatch("build_affine_constraints: A not square");
  if (B.rows() != A.rows()) throw DimensionMismatch("build_affine_constraints: B rows");
  if (C.cols() != A.cols()) throw DimensionMismatch("build_affine_constraints: C cols");
  if (horizon < 1) throw Error("build_affine_constraints: horizon must be >= 1");

  AffineSystem sys;
  sys.n = static_cast<int>(A.rows());
  sys.q = static_cast<int>(B.cols());
  sys.s = static_cast<int>(C.rows());
  sys.horizon = horizon;
  const int n = sys.n, q = sys.q, s = sys.s, T = horizon;

  sys.offset_R = 0;
  sys.offset_M = sys.offset_R + (T + 1) * n * n;
  sys.offset_N = sys.offset_M + (T + 1) * q * n;
  sys.offset_L = sys.offset_N + (T + 1) * n * s;
  const int unknowns = sys.offset_L + (T + 1) * q * s;

  sys.layout.resize(unknowns);
  for (int d = 1; d <= T + 1; ++d) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        sys.layout[sys.index_of(TapBlock::R, d, i, j)] = {TapBlock::R, d, i, j};
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < n; ++j)
        sys.layout[sys.index_of(TapBlock::M, d, i, j)] = {TapBlock::M, d, i, j};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < s; ++j)
        sys.layout[sys.index_of(TapBlock::N, d, i, j)] = {TapBlock::N, d, i, j};
  }
  for (int d = 0; d <= T; ++d)
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < s; ++j)
        sys.layout[sys.index_of(TapBlock::L, d, i, j)] = {TapBlock::L, d, i, j};

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> rhs;
  std::vector<int> family;
  int row = 0;
  auto in_rmn = [T](int delay) { return delay >= 1 && delay <= T + 1; };
  auto in_l = [T](int delay) { return delay >= 0 && delay <= T; };

  // Family 0: (zI - A) R - B M = I, matching z^-tau for tau = 0..T+1.
  for (int tau = 0; tau <= T + 1; ++tau) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (in_rmn(tau + 1))
          triplets.emplace_back(row, sys.index_of(TapBlock::R, tau + 1, i, j), 1.0);
        if (in_rmn(tau)) {
          for (int k = 0; k < n; ++k)
            if (A(i, k) != 0.0)
              triplets.emplace_back(row, sys.index_of(TapBlock::R, tau, k, j), -A(i, k));
          for (int k = 0; k < q; ++k)
            if (B(i, k) != 0.0)
              triplets.emplace_back(row, sys.index_of(TapBlock::M, tau, k, j), -B(i, k));
        }
        rhs.push_back(tau == 0 && i == j ? 1.0 : 0.0);
        family.push_back(0);
        ++row;
      }
    }
  }
  // Family 1: (zI - A) N - B L = 0.
  for (int tau = 0; tau <= T + 1; ++tau) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < s; ++j) {
        if (in_rmn(tau + 1))
          triplets.emplace_back(row, sys.index_of(TapBlock::N, tau + 1, i, j), 1.0);
        if (in_rmn(tau))
          for (int k = 0; k < n; ++k)
            if (A(i, k) != 0.0)
              triplets.emplace_back(row, sys.index_of(TapBlock::N, tau, k, j), -A(i, k));
        if (in_l(tau))
          for (int k = 0; k < q; ++k)
            if (B(i, k) != 0.0)
              triplets.emplace_back(row, sys.index_of(TapBlock::L, tau, k, j), -B(i, k));
        rhs.push_back(0.0);
        family.push_back(1);
        ++row;
      }
    }
  }
  // Family 2: R (zI - A) - N C = I.
  for (int tau = 0; tau <= T + 1; ++tau) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (in_rmn(tau + 1))
          triplets.emplace_back(row, sys.index_of(TapBlock::R, tau + 1, i, j), 1.0);
        if (in_rmn(tau)) {
          for (int k = 0; k < n; ++k)
            if (A(k, j) != 0.0)
              triplets.emplace_back(row, sys.index_of(TapBlock::R, tau, i, k), -A(k, j));
          for (int k = 0; k < s; ++k)
            if (C(k, j) != 0.0)
              triplets.emplace_back(row, sys.index_of(TapBlock::N, tau, i, k), -C(k, j));
        }
        rhs.push_back(tau == 0 && i == j ? 1.0 : 0.0);
        family.push_back(2);
        ++row;
      }
    }
  }
  // Family 3: M (zI - A) - L C = 0.
  for (int tau = 0; tau <= T + 1; ++tau) {
    for (int i = 0; i < q; ++i) {
      for (int j = 0; j < n; ++j) {
        if (in_rmn(tau + 1))
          triplets.emplace_back(row, sys.index_of(TapBlock::M, tau + 1, i, j), 1.0);
        if (in_rmn(tau))
          for (int k = 0; k < n; ++k)
            if (A(k, j) != 0.0)
              triplets.emplace_back(row, sys.index_of(TapBlock::M, tau, i, k), -A(k, j));
        if (in_l(tau))
          for (int k = 0; k < s; ++k)
            if (C(k, j) != 0.0)
              triplets.emplace_back(row, sys.index_of(TapBlock::L, tau, i, k), -C(k, j));
        rhs.push_back(0.0);
        family.push_back(3);
        ++row;
      }
    }
  }

  sys.E.resize(row, unknowns);
  sys.E.setFromTriplets(triplets.begin(), triplets.end());
  sys.f = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  sys.row_family = std::move(family);
  return sys;
}

FeasibilityReport check_feasibility(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::MatrixXd& C, int horizon) {
  const AffineSystem sys = build_affine_constraints(A, B, C, horizon);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(sys.E);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd theta = svd.solve(sys.f);

  FeasibilityReport report;
  report.residual = (dense * theta - sys.f).norm();
  report.feasible = report.residual <= 1e-8 * (1.0 + sys.f.norm());
  const double cutoff = kRankTol * svd.singularValues()(0);
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > cutoff) ++report.rank;
  report.null_dim = sys.num_unknowns() - report.rank;
  return report;
}

ResidualReport verify_params(const FirParams& params, const Eigen::MatrixXd& A,
                             const Eigen::MatrixXd& B, const Eigen::MatrixXd& C) {
  const AffineSystem sys = build_affine_constraints(A, B, C, params.horizon);
  const Eigen::VectorXd residual = sys.E * sys.pack(params) - sys.f;
  ResidualReport report;
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    const double a = std::abs(residual(i));
    report.max_abs = std::max(report.max_abs, a);
    double& fam = report.family_max[sys.row_family[static_cast<size_t>(i)]];
    fam = std::max(fam, a);
  }
  return report;
}

FirParams true_dual_params(const RationalTF& g, const Eigen::MatrixXd& A,
                           const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                           int horizon) {
  const int n = static_cast<int>(A.rows());
  if (B.cols() != 1 || C.rows() != 1)
    throw DimensionMismatch("true_dual_params: SISO loop expected");
  if (!g.is_proper())
    throw ImproperTransferFunction("true_dual_params: plant must be proper");

  // Stability of the loop (G, C(zI-A)^{-1}B) under positive feedback.
  {
    const StateSpaceModel k_ss(A, B, C, Eigen::MatrixXd::Zero(1, 1));
    const Eigen::MatrixXd acl = closed_loop_matrix(tf_to_ss(g), k_ss);
    double radius = 0.0;
    if (acl.rows() > 0) {
      Eigen::EigenSolver<Eigen::MatrixXd> es(acl, false);
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        radius = std::max(radius, std::abs(es.eigenvalues()(i)));
    }
    if (radius >= 1.0 - 1e-9)
      throw UnstableLoop("true_dual_params: closed loop is not stable");
  }

  FirParams params = FirParams::zeros(n, 1, 1, horizon);
  const int steps = horizon + 2;

  // Impulse response of the dual loop: at each step the realization output
  // ubar is formed first, G advances one sample, then the state updates.
  // ubar[t] = C xi[t] + delta_ubar[t], ybar[t] = G(ubar)[t],
  // xi[t+1] = A xi[t] + B ybar[t] + delta_xi[t].
  auto run = [&](int impulse_state, bool impulse_output, auto&& record) {
    TfFilter plant(g);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);
    for (int t = 0; t < steps; ++t) {
      const double delta_u = (impulse_output && t == 0) ? 1.0 : 0.0;
      const double ubar = (C * xi)(0) + delta_u;
      const double ybar = plant.step(ubar);
      record(t, xi, ybar);
      Eigen::VectorXd next = A * xi + B * ybar;
      if (impulse_state >= 0 && t == 0) next(impulse_state) += 1.0;
      xi = next;
    }
  };

  for (int j = 0; j < n; ++j) {
    run(j, false, [&](int t, const Eigen::VectorXd& xi, double ybar) {
      if (t >= 1 && t <= horizon + 1) {
        params.R[t - 1].col(j) = xi;
        params.M[t - 1](0, j) = ybar;
      }
    });
  }
  run(-1, true, [&](int t, const Eigen::VectorXd& xi, double ybar) {
    if (t >= 1 && t <= horizon + 1) params.N[t - 1].col(0) = xi;
    if (t <= horizon) params.L[t](0, 0) = ybar;
  });
  return params;
}

} // namespace dslp
