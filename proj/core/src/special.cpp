#include "fbmstm/special.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fbmstm/errors.hpp"

namespace fbmstm {

namespace {

constexpr double kMaxAbsA = 500.0;
constexpr double kMaxAbsZ = 700.0;
constexpr double kLogPi = 1.1447298858494001741;  // log(pi)
constexpr double kLog2 = 0.6931471805599453094;

bool is_nonpositive_integer(double x) noexcept {
  return x <= 0.0 && x == std::floor(x);
}

// Direct series for Phi(a, b, z); assumes the polynomial case or z >= 0.
double phi_series(double a, double b, double z) {
  double term = 1.0;
  double sum = 1.0;
  const bool truncates = is_nonpositive_integer(a);
  const std::int64_t poly_len = truncates ? static_cast<std::int64_t>(-a) : 0;
  int small_streak = 0;
  for (std::int64_t k = 0;; ++k) {
    if (truncates && k >= poly_len) break;
    term *= (a + static_cast<double>(k)) * z /
            ((b + static_cast<double>(k)) * static_cast<double>(k + 1));
    sum += term;
    if (!truncates) {
      if (std::abs(term) <= 1e-16 * std::abs(sum)) {
        if (++small_streak >= 3) break;
      } else {
        small_streak = 0;
      }
      if (k > 100000)
        throw RangeExceeded("kummer_phi: series did not converge");
    }
  }
  return sum;
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
  return std::lgamma(x);
}

double kummer_phi(double a, double b, double z) {
  if (is_nonpositive_integer(b))
    throw PoleError("kummer_phi: b must not be a non-positive integer");

  // Exactly truncating polynomial: all terms of Phi(-n, 1/2, -x) with x >= 0
  // are nonnegative, and the general polynomial is short enough to sum as-is.
  if (is_nonpositive_integer(a)) {
    if (-a > kMaxAbsA) throw RangeExceeded("kummer_phi: |a| exceeds supported range");
    if (std::abs(z) > kMaxAbsZ) throw RangeExceeded("kummer_phi: |z| exceeds supported range");
    return phi_series(a, b, z);
  }

  const double a_eff = z < 0.0 ? b - a : a;
  if (std::abs(a_eff) > kMaxAbsA || std::abs(a) > kMaxAbsA)
    throw RangeExceeded("kummer_phi: |a| exceeds supported range");
  if (std::abs(z) > kMaxAbsZ) throw RangeExceeded("kummer_phi: |z| exceeds supported range");

  // Kummer transformation avoids the alternating-series cancellation.
  if (z < 0.0) return std::exp(z) * phi_series(a_eff, b, -z);
  return phi_series(a, b, z);
}

double parabolic_u(double a, double z) {
  if (!(a > -0.5)) throw std::domain_error("parabolic_u: requires a > -1/2");

  const double power = a - 0.5;
  auto integrand = [power, z](double w) {
    return std::pow(w, power) * std::exp(-0.5 * w * w - z * w);
  };

  // Cutoff so the neglected tail is below 1e-18 of the integral: the
  // integrand beyond W is dominated by exp(-W^2/2 + |z| W) times a slowly
  // varying power factor.
  const double upper =
      std::abs(z) + std::sqrt(2.0 * std::max(a, 1.0)) + 14.0;

  double error = 0.0;
  double integral = 0.0;
  if (a >= 0.5) {
    integral = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        integrand, 0.0, upper, 15, 1e-10, &error);
  } else {
    // w^{a-1/2} is singular at 0 for a < 1/2; Gauss-Kronrod cannot certify
    // the endpoint, tanh-sinh absorbs it.
    boost::math::quadrature::tanh_sinh<double> ts;
    integral = ts.integrate(integrand, 0.0, upper, 1e-10, &error);
  }
  if (!(std::isfinite(integral)))
    throw QuadratureFailure("parabolic_u: integral did not evaluate to a finite value");
  if (error > 1e-8 * std::max(std::abs(integral), 1e-300))
    throw QuadratureFailure("parabolic_u: adaptive refinement exhausted its budget");

  return std::exp(-0.25 * z * z - log_gamma(a + 0.5)) * integral;
}

double log_kummer_phi_neg_n_half(std::int64_t n, double x) {
  if (n < 0) throw std::domain_error("log_kummer_phi_neg_n_half: n must be >= 0");
  if (!(x >= 0.0)) throw std::domain_error("log_kummer_phi_neg_n_half: x must be >= 0");
  if (n == 0 || x == 0.0) return 0.0;
  // term_k = n!/(n-k)! * x^k / ((1/2)_k k!), k = 0..n; all nonnegative.
  double log_term = 0.0;
  double max_log = 0.0;
  double sum_scaled = 1.0;  // running sum of exp(log_term - max_log)
  const double log_x = std::log(x);
  for (std::int64_t k = 0; k < n; ++k) {
    log_term += std::log(static_cast<double>(n - k)) + log_x -
                std::log(0.5 + static_cast<double>(k)) -
                std::log(static_cast<double>(k + 1));
    if (log_term > max_log) {
      sum_scaled = sum_scaled * std::exp(max_log - log_term) + 1.0;
      max_log = log_term;
    } else {
      sum_scaled += std::exp(log_term - max_log);
    }
  }
  return max_log + std::log(sum_scaled);
}

double gaussian_raw_moment(const GaussianScalar& g, int order) {
  if (order <= 0 || order % 2 != 0)
    throw std::domain_error("gaussian_raw_moment: order must be a positive even integer");
  if (order > 64)
    throw RangeExceeded("gaussian_raw_moment: order > 64; use gaussian_raw_moment_log");
  if (!(g.std >= 0.0)) throw std::domain_error("gaussian_raw_moment: std must be >= 0");

  const std::int64_t n = order / 2;
  if (g.std == 0.0) return std::pow(g.mean, static_cast<double>(order));
  const double x = g.mean * g.mean / (2.0 * g.std * g.std);
  const double log_moment = static_cast<double>(n) * kLog2 - 0.5 * kLogPi +
                            static_cast<double>(order) * std::log(g.std) +
                            log_gamma(static_cast<double>(n) + 0.5) +
                            log_kummer_phi_neg_n_half(n, x);
  return std::exp(log_moment);
}

SignedLog gaussian_raw_moment_log(const GaussianScalar& g, std::int64_t order) {
  if (order <= 0 || order % 2 != 0)
    throw std::domain_error("gaussian_raw_moment_log: order must be a positive even integer");
  if (!(g.std >= 0.0)) throw std::domain_error("gaussian_raw_moment_log: std must be >= 0");
  if (g.std == 0.0 && g.mean == 0.0)
    throw std::domain_error("gaussian_raw_moment_log: degenerate zero distribution");

  const std::int64_t n = order / 2;
  if (g.std == 0.0)
    return {+1, static_cast<double>(order) * std::log(std::abs(g.mean))};
  const double x = g.mean * g.mean / (2.0 * g.std * g.std);
  const double log_moment = static_cast<double>(n) * kLog2 - 0.5 * kLogPi +
                            static_cast<double>(order) * std::log(g.std) +
                            log_gamma(static_cast<double>(n) + 0.5) +
                            log_kummer_phi_neg_n_half(n, x);
  return {+1, log_moment};
}

}  // namespace fbmstm
