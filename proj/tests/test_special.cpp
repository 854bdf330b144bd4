#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "fbmstm/errors.hpp"
#include "fbmstm/special.hpp"

using namespace fbmstm;

namespace {

// Independent raw-moment oracle: m_k = mu m_{k-1} + (k-1) sigma^2 m_{k-2}.
double wick_moment(double mu, double sigma, int order) {
  double prev = 1.0, cur = mu;
  if (order == 0) return prev;
  for (int k = 2; k <= order; ++k) {
    const double next = mu * cur + static_cast<double>(k - 1) * sigma * sigma * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// Plain 50-term series, no transformation; usable when cancellation is mild.
double phi_series_50(double a, double b, double z) {
  double term = 1.0, sum = 1.0;
  for (int k = 0; k < 50; ++k) {
    term *= (a + k) * z / ((b + k) * (k + 1.0));
    sum += term;
  }
  return sum;
}

double double_factorial_odd(int n) {  // (2n-1)!!
  double v = 1.0;
  for (int k = 2 * n - 1; k >= 1; k -= 2) v *= k;
  return v;
}

}  // namespace

TEST_SUITE("special") {

TEST_CASE("log gamma values") {
  CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(log_gamma(0.5) == doctest::Approx(std::log(std::sqrt(M_PI))).epsilon(1e-14));
  CHECK(log_gamma(10.0) == doctest::Approx(std::log(362880.0)).epsilon(1e-14));
  CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
  CHECK_THROWS_AS(log_gamma(-3.5), std::domain_error);
}

TEST_CASE("log gamma against an independent reference") {
  for (double x = 0.03125; x <= 1e4; x *= 1.7) {
    const double ref = boost::math::lgamma(x);
    const double got = log_gamma(x);
    const double scale = std::max(std::abs(ref), 1e-6);
    CHECK(std::abs(got - ref) / scale <= 1e-12);
  }
}

TEST_CASE("kummer phi closed forms") {
  CHECK(kummer_phi(2.7, 1.3, 0.0) == 1.0);
  for (double z : {-3.0, -0.5, 0.25, 2.0, 10.0})
    CHECK(kummer_phi(1.0, 1.0, z) == doctest::Approx(std::exp(z)).epsilon(1e-13));
  for (double z : {-2.0, 0.5, 4.0}) {
    CHECK(kummer_phi(-1.0, 0.5, z) == doctest::Approx(1.0 - 2.0 * z).epsilon(1e-13));
    CHECK(kummer_phi(-1.0, 0.5, z) == doctest::Approx(phi_series_50(-1.0, 0.5, z)).epsilon(1e-13));
  }
}

TEST_CASE("kummer phi errors") {
  CHECK_THROWS_AS(kummer_phi(1.0, 0.0, 1.0), PoleError);
  CHECK_THROWS_AS(kummer_phi(1.0, -2.0, 1.0), PoleError);
  CHECK_THROWS_AS(kummer_phi(501.0, 0.5, 1.0), RangeExceeded);
  CHECK_THROWS_AS(kummer_phi(1.0, 0.5, 701.0), RangeExceeded);
  CHECK_THROWS_AS(kummer_phi(1.0, 0.5, -701.0), RangeExceeded);
}

TEST_CASE("kummer transformation residual on the documented grid") {
  for (double a = -20.0; a <= 20.0; a += 1.0) {
    for (double b : {0.5, 1.5}) {
      for (double z = -50.0; z <= 50.0; z += 5.0) {
        const double lhs = kummer_phi(a, b, z);
        const double rhs = std::exp(z) * kummer_phi(b - a, b, -z);
        const double scale = std::max(std::abs(lhs), 1e-280);
        CHECK(std::abs(lhs - rhs) / scale <= 1e-9);
      }
    }
  }
}

TEST_CASE("kummer differentiation identity at n=1") {
  const double h = 1e-5;
  for (double a : {-3.0, 0.7, 2.5}) {
    for (double b : {0.5, 1.5}) {
      for (double z : {0.5, 1.0, 3.0}) {
        auto f = [&](double x) { return std::exp(-x) * kummer_phi(a, b, x); };
        const double fd = (f(z + h) - f(z - h)) / (2.0 * h);
        const double rhs = -((b - a) / b) * std::exp(-z) * kummer_phi(a, b + 1.0, z);
        CHECK(std::abs(fd - rhs) / std::max(std::abs(rhs), 1e-12) <= 1e-5);
      }
    }
  }
}

TEST_CASE("kummer asymptotic envelope ratio") {
  const double a = 3.0, b = 0.5, z = 200.0;
  const double lead = std::exp(log_gamma(b) - log_gamma(a)) * std::pow(z, a - b) * std::exp(z);
  CHECK(kummer_phi(a, b, z) / lead == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("parabolic cylinder closed form at z=0") {
  CHECK(parabolic_u(0.5, 0.0) == doctest::Approx(std::sqrt(M_PI / 2.0)).epsilon(1e-10));
  CHECK_THROWS_AS(parabolic_u(-0.5, 1.0), std::domain_error);
}

TEST_CASE("parabolic cylinder strictly decreasing in z") {
  for (double a : {0.0, 0.5, 2.0}) {
    double prev = parabolic_u(a, -3.0);
    for (double z = -2.0; z <= 3.0; z += 1.0) {
      const double cur = parabolic_u(a, z);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("parabolic cylinder reproduces kummer phi") {
  for (double a : {0.5, 1.5, 3.0}) {
    for (double z : {0.5, 1.0, 2.0}) {
      const double lhs = kummer_phi(a / 2.0 + 0.25, 0.5, z * z / 2.0);
      const double rhs = std::pow(2.0, a / 2.0 - 0.75) * std::exp(log_gamma(a / 2.0 + 0.75)) *
                         std::exp(z * z / 4.0) / std::sqrt(M_PI) *
                         (parabolic_u(a, z) + parabolic_u(a, -z));
      CHECK(std::abs(lhs - rhs) / std::abs(lhs) <= 1e-7);
    }
  }
}

TEST_CASE("gaussian raw moment closed forms") {
  const GaussianScalar g{1.7, 0.6};
  CHECK(gaussian_raw_moment(g, 2) ==
        doctest::Approx(1.7 * 1.7 + 0.6 * 0.6).epsilon(1e-13));
  CHECK(gaussian_raw_moment(g, 4) == doctest::Approx(wick_moment(1.7, 0.6, 4)).epsilon(1e-12));
  for (int n = 1; n <= 8; ++n) {
    const GaussianScalar centered{0.0, 1.3};
    const double expected = std::pow(1.3, 2 * n) * double_factorial_odd(n);
    CHECK(gaussian_raw_moment(centered, 2 * n) == doctest::Approx(expected).epsilon(1e-12));
  }
  const GaussianScalar degenerate{2.0, 0.0};
  CHECK(gaussian_raw_moment(degenerate, 6) == doctest::Approx(64.0).epsilon(1e-13));
}

TEST_CASE("gaussian raw moment matches the Wick recursion") {
  for (double mu : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    for (double sigma : {0.25, 0.5, 1.0, 2.0, 5.0}) {
      for (int order = 2; order <= 16; order += 2) {
        const double expected = wick_moment(mu, sigma, order);
        const double got = gaussian_raw_moment({mu, sigma}, order);
        CHECK(std::abs(got - expected) / std::abs(expected) <= 1e-8);
      }
    }
  }
}

TEST_CASE("gaussian raw moment errors") {
  CHECK_THROWS_AS(gaussian_raw_moment(GaussianScalar{0.0, 1.0}, 3), std::domain_error);
  CHECK_THROWS_AS(gaussian_raw_moment(GaussianScalar{0.0, 1.0}, 0), std::domain_error);
  CHECK_THROWS_AS(gaussian_raw_moment(GaussianScalar{0.0, 1.0}, 66), RangeExceeded);
  CHECK_THROWS_AS(gaussian_raw_moment_log(GaussianScalar{0.0, 0.0}, 2), std::domain_error);
}

TEST_CASE("log-domain moment agrees with the plain one") {
  for (double mu : {-1.5, 0.0, 0.8}) {
    for (double sigma : {0.5, 2.0}) {
      for (int order = 2; order <= 16; order += 2) {
        const double plain = gaussian_raw_moment({mu, sigma}, order);
        const SignedLog log_m = gaussian_raw_moment_log({mu, sigma}, order);
        CHECK(log_m.sign == +1);
        CHECK(std::abs(std::exp(log_m.log_abs) - plain) / plain <= 1e-8);
      }
    }
  }
  CHECK(gaussian_raw_moment_log({3.0, 1.0}, 2).log_abs ==
        doctest::Approx(std::log(10.0)).epsilon(1e-13));
  for (int n : {1, 4, 12, 400}) {
    const SignedLog log_m = gaussian_raw_moment_log({0.0, 1.0}, 2 * n);
    // log (2n-1)!! = log Gamma(2n) - log Gamma(n) - (n-1) log 2
    const double expected = log_gamma(2.0 * n) - log_gamma(static_cast<double>(n)) -
                            (static_cast<double>(n) - 1.0) * std::log(2.0);
    CHECK(log_m.log_abs == doctest::Approx(expected).epsilon(1e-10));
  }
}

}  // TEST_SUITE
