#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "dslp/signals.hpp"
#include "dslp/lti.hpp"

using namespace dslp;

TEST_CASE("prbs_generate") {
  SUBCASE("benchmark excitation: 10 periods of 511") {
    const Signal s = prbs_generate(9, 10.0, 10);
    REQUIRE(s.size() == 5110);
    for (size_t t = 0; t < 511; ++t) CHECK(s[t] == s[t + 511]);
    int plus = 0, minus = 0;
    for (size_t t = 0; t < 511; ++t) (s[t] > 0 ? plus : minus)++;
    // Maximal-length property: 2^(order-1) of one sign.
    CHECK(plus == 256);
    CHECK(minus == 255);
  }
  SUBCASE("smallest LFSR has period 3") {
    const Signal s = prbs_generate(2, 1.0, 2, {2, 1}, {1, 1});
    REQUIRE(s.size() == 6);
    for (size_t t = 0; t < 3; ++t) CHECK(s[t] == s[t + 3]);
    CHECK((s[0] != s[1] || s[1] != s[2]));  // not constant
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(prbs_generate(9, 10.0, 1, {9, 5}, std::vector<uint8_t>(9, 0)),
                    ZeroInitialState);
    // x^4 + x^2 + 1 is not primitive: short cycle.
    CHECK_THROWS_AS(prbs_generate(4, 1.0, 1, {4, 2}, std::vector<uint8_t>(4, 1)),
                    NonMaximalLength);
  }
  SUBCASE("circular autocorrelation at nonzero lags is -A^2/period") {
    const int period = 511;
    const Signal s = prbs_generate(9, 1.0, 1);
    for (int lag : {1, 7, 100, 255, 510}) {
      // Integer arithmetic on +-1 values keeps the check exact.
      long sum = 0;
      for (int t = 0; t < period; ++t)
        sum += static_cast<long>(s[t]) * static_cast<long>(s[(t + lag) % period]);
      CHECK(sum == -1);
    }
  }
}

TEST_CASE("gaussian_noise") {
  SUBCASE("sigma = 0 gives zeros") {
    const Signal s = gaussian_noise(100, 0.0, {123, 0});
    for (double v : s.samples) CHECK(v == 0.0);
  }
  SUBCASE("benchmark sigma: sample variance within 10%") {
    const Signal s = gaussian_noise(5110, 2.0, {2024, 1});
    const double mean =
        std::accumulate(s.samples.begin(), s.samples.end(), 0.0) / s.size();
    double var = 0.0;
    for (double v : s.samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.size() - 1);
    CHECK(var > 4.0 * 0.9);
    CHECK(var < 4.0 * 1.1);
  }
  SUBCASE("determinism and stream separation") {
    const Signal a = gaussian_noise(64, 1.0, {7, 3});
    const Signal b = gaussian_noise(64, 1.0, {7, 3});
    const Signal c = gaussian_noise(64, 1.0, {7, 4});
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
  }
  SUBCASE("negative sigma rejected") {
    CHECK_THROWS_AS(gaussian_noise(8, -1.0, {0, 0}), NegativeSigma);
  }
}

TEST_CASE("signal rejects non-finite values") {
  CHECK_THROWS_AS(Signal({1.0, std::nan("")}, "bad"), NonFiniteSample);
  CHECK_THROWS_AS(Signal({std::numeric_limits<double>::infinity()}, "bad"),
                  NonFiniteSample);
}

TEST_CASE("toeplitz_regressor") {
  SUBCASE("direct construction") {
    const Eigen::MatrixXd phi = toeplitz_regressor(Signal({1, 2, 3}, "r"), 1);
    REQUIRE(phi.rows() == 3);
    REQUIRE(phi.cols() == 2);
    CHECK(phi(0, 0) == 1.0);
    CHECK(phi(0, 1) == 0.0);
    CHECK(phi(1, 0) == 2.0);
    CHECK(phi(1, 1) == 1.0);
    CHECK(phi(2, 0) == 3.0);
    CHECK(phi(2, 1) == 2.0);
  }
  SUBCASE("horizon 0 is the column vector") {
    const Eigen::MatrixXd phi = toeplitz_regressor(Signal({4, 5, 6}, "r"), 0);
    CHECK(phi.cols() == 1);
    CHECK(phi(2, 0) == 6.0);
  }
  SUBCASE("impulse convolution identity") {
    Signal impulse = Signal::zeros(8, "imp");
    impulse.samples[0] = 1.0;
    const Eigen::MatrixXd phi = toeplitz_regressor(impulse, 4);
    Eigen::VectorXd taps(5);
    taps << 1.0, -0.5, 0.25, 0.0, 2.0;
    const Eigen::VectorXd out = phi * taps;
    for (int t = 0; t < 5; ++t) CHECK(out(t) == taps(t));
    for (int t = 5; t < 8; ++t) CHECK(out(t) == 0.0);
  }
  SUBCASE("empty signal rejected") {
    CHECK_THROWS_AS(toeplitz_regressor(Signal(), 0), EmptySignal);
  }
}

TEST_CASE("regressor times taps equals FIR simulation") {
  const Signal r = prbs_generate(5, 2.0, 3);
  const int horizon = 6;
  const Eigen::MatrixXd phi = toeplitz_regressor(r, horizon);
  Eigen::VectorXd taps(horizon + 1);
  taps << 0.7, -0.2, 0.05, 0.3, 0.0, -0.6, 0.11;

  // FIR transfer function with the same taps: sum_i taps[i] z^{-i}.
  std::vector<double> num(horizon + 1);
  for (int i = 0; i <= horizon; ++i) num[horizon - i] = taps(i);
  const RationalTF fir{Polynomial(std::move(num)), Polynomial::shift(horizon)};
  const std::vector<double> sim = tf_simulate(fir, r.samples);
  const Eigen::VectorXd lin = phi * taps;
  for (size_t t = 0; t < r.size(); ++t)
    CHECK(lin(static_cast<Eigen::Index>(t)) == doctest::Approx(sim[t]).epsilon(1e-12));
}

TEST_CASE("signal csv round trip") {
  const Signal s = gaussian_noise(32, 1.5, {99, 0});
  const std::string path = "test_signal_tmp.csv";
  signal_to_csv(s, path);
  const Signal back = signal_from_csv(path, s.name);
  REQUIRE(back.size() == s.size());
  for (size_t t = 0; t < s.size(); ++t)
    CHECK(back[t] == doctest::Approx(s[t]).epsilon(1e-15));
  std::remove(path.c_str());
}
