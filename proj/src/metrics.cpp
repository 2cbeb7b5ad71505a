#include "dslp/metrics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace dslp {

namespace {

double spectral_norm(const Eigen::MatrixXcd& m) {
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

void check_same_grid(const FrequencyResponse& a, const FrequencyResponse& b,
                     const char* what) {
  if (a.omegas.size() != b.omegas.size())
    throw DimensionMismatch(std::string(what) + ": grids differ in size");
  for (size_t i = 0; i < a.omegas.size(); ++i)
    if (a.omegas[i] != b.omegas[i])
      throw DimensionMismatch(std::string(what) + ": grids differ");
}

} // namespace

double pairwise_sum(std::span<const double> terms) {
  if (terms.size() <= 8) {
    double acc = 0.0;
    for (double t : terms) acc += t;
    return acc;
  }
  const size_t half = terms.size() / 2;
  return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

std::vector<double> freq_grid(int n) {
  if (n < 2) throw TooFewPoints("freq_grid: need at least 2 points");
  std::vector<double> omegas(n);
  for (int i = 0; i < n; ++i)
    omegas[i] = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
  return omegas;
}

double err1(const FrequencyResponse& g, const FrequencyResponse& g_hat) {
  check_same_grid(g, g_hat, "err1");
  std::vector<double> terms(g.size());
  for (size_t i = 0; i < g.size(); ++i) {
    const double ref = spectral_norm(g.values[i]);
    if (ref < 1e-12)
      throw ZeroReferenceValue("err1: |G| below 1e-12 at omega = " +
                               std::to_string(g.omegas[i]));
    terms[i] = 100.0 * spectral_norm(g.values[i] - g_hat.values[i]) / ref;
  }
  return pairwise_sum(terms);
}

double err2(const FrequencyResponse& g, const FrequencyResponse& g_hat,
            const FrequencyResponse& k) {
  check_same_grid(g, g_hat, "err2");
  check_same_grid(g, k, "err2");
  std::vector<double> terms(g.size());
  for (size_t i = 0; i < g.size(); ++i) {
    const auto& gv = g.values[i];
    const auto& gh = g_hat.values[i];
    const auto& kv = k.values[i];
    const Eigen::Index p = gv.rows();
    auto loop_map = [&](const Eigen::MatrixXcd& plant) {
      const Eigen::MatrixXcd closed =
          Eigen::MatrixXcd::Identity(p, p) - plant * kv;
      Eigen::FullPivLU<Eigen::MatrixXcd> lu(closed);
      if (!lu.isInvertible())
        throw SingularClosedLoop("err2: I - G K singular at omega = " +
                                 std::to_string(g.omegas[i]));
      return Eigen::MatrixXcd(lu.solve(plant));
    };
    const Eigen::MatrixXcd l_true = loop_map(gv);
    const Eigen::MatrixXcd l_hat = loop_map(gh);
    const double ref = spectral_norm(l_true);
    if (ref < 1e-12)
      throw ZeroReferenceValue("err2: |L| below 1e-12 at omega = " +
                               std::to_string(g.omegas[i]));
    terms[i] = 100.0 * spectral_norm(l_true - l_hat) / ref;
  }
  return pairwise_sum(terms);
}

MetricReport evaluate_metrics(const FrequencyResponse& g, const FrequencyResponse& g_hat,
                              const FrequencyResponse& k, const StateSpaceModel& g_hat_ss,
                              const StateSpaceModel& k_ss) {
  MetricReport report;
  report.err1 = err1(g, g_hat);
  report.err2 = err2(g, g_hat, k);
  report.grid_size = static_cast<int>(g.size());
  report.cl_stable = closed_loop_stable(g_hat_ss, k_ss).stable;
  return report;
}

StabilityCertificate closed_loop_stable(const StateSpaceModel& g_hat,
                                        const StateSpaceModel& k) {
  const Eigen::MatrixXd acl = closed_loop_matrix(g_hat, k);
  StabilityCertificate cert;
  if (acl.rows() == 0) {
    cert.stable = true;
    return cert;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(acl, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw Error("closed_loop_stable: eigenvalue iteration failed");
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
    cert.spectral_radius =
        std::max(cert.spectral_radius, std::abs(solver.eigenvalues()(i)));
  cert.stable = cert.spectral_radius < 1.0 - 1e-9;
  return cert;
}

} // namespace dslp
