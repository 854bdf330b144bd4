#pragma once

#include <cstdint>

namespace fbmstm {

// Scalar Gaussian N(mean, std^2); std = 0 degenerates to the point mass.
struct GaussianScalar {
  double mean = 0.0;
  double std = 1.0;
};

// Sign/log-magnitude pair representing sign * exp(log_abs).
struct SignedLog {
  int sign = 0;
  double log_abs = 0.0;
};

// log Gamma(x) for x > 0.
double log_gamma(double x);

// Kummer's confluent hypergeometric function Phi(a, b, z), evaluated by the
// term-ratio series. Negative z routes through Kummer's transformation
// Phi(a,b,z) = e^z Phi(b-a, b, -z); non-positive integer a truncates the
// series exactly (polynomial case). Supported envelope: |a| <= 500 and
// |z| <= 700 after transformation.
double kummer_phi(double a, double b, double z);

// Parabolic cylinder function U(a, z) for a > -1/2, from the integral
// representation exp(-z^2/4)/Gamma(a+1/2) * Int_0^inf w^{a-1/2}
// exp(-w^2/2 - z w) dw via adaptive Gauss-Kronrod quadrature.
double parabolic_u(double a, double z);

// Raw even moment E[Q^order] of Q ~ N(mean, std^2):
// (2^n/sqrt(pi)) * std^{2n} * Gamma(n+1/2) * Phi(-n, 1/2, -mean^2/(2 std^2))
// with order = 2n. order must be even, positive and <= 64.
double gaussian_raw_moment(const GaussianScalar& g, int order);

// Log-domain variant for large orders; sign is always +1 for even order.
SignedLog gaussian_raw_moment_log(const GaussianScalar& g, std::int64_t order);

// log Phi(-n, 1/2, -x) for x >= 0; every series term is nonnegative, so the
// sum is evaluated stably as a log-sum-exp. Shared by the moment routines.
double log_kummer_phi_neg_n_half(std::int64_t n, double x);

}  // namespace fbmstm
