#include "fbmstm/theory.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fbmstm/errors.hpp"
#include "fbmstm/fbm.hpp"
#include "fbmstm/special.hpp"
#include "fbmstm/stm.hpp"

namespace fbmstm {

namespace {

constexpr double kE = 2.718281828459045235;
constexpr double kPi = 3.141592653589793238;

bool kappa_equals_2h(double kappa, double hurst) noexcept {
  return std::abs(kappa - 2.0 * hurst) <= kKappaEqualityTol;
}

void check_hurst_fractional(double hurst) {
  if (!(hurst > 0.5) || !(hurst < 1.0))
    throw std::domain_error("theorem classification: hurst must lie in (0.5, 1)");
}

}  // namespace

const char* to_string(TheoremSource source) noexcept {
  switch (source) {
    case TheoremSource::ContinuousCondMS: return "ContinuousCondMS";
    case TheoremSource::Theorem1_i: return "Theorem1_i";
    case TheoremSource::Theorem1_ii: return "Theorem1_ii";
    case TheoremSource::Theorem1_iii: return "Theorem1_iii";
    case TheoremSource::Theorem2_i: return "Theorem2_i";
    case TheoremSource::Theorem2_ii: return "Theorem2_ii";
    case TheoremSource::BrownianProposition: return "BrownianProposition";
    case TheoremSource::OpenRegion: return "OpenRegion";
  }
  return "OpenRegion";
}

const char* to_string(GuaranteeLabel label) noexcept {
  switch (label) {
    case GuaranteeLabel::StableGuaranteed: return "StableGuaranteed";
    case GuaranteeLabel::NotUnconditionallyStable: return "NotUnconditionallyStable";
    case GuaranteeLabel::NoGuarantee: return "NoGuarantee";
  }
  return "NoGuarantee";
}

bool continuous_stability(double lambda, double mu, double kappa, double hurst) {
  if (!(hurst >= 0.5) || !(hurst < 1.0))
    throw std::domain_error("continuous_stability: hurst must lie in [0.5, 1)");
  if (kappa_equals_2h(kappa, hurst)) return -lambda + mu * mu < 0.0;
  if (kappa > 2.0 * hurst) return lambda > 0.0;
  return false;
}

double theorem1_threshold() {
  const double c = std::sqrt(1.5) * kE;
  return c / (c + 1.0);
}

TheoremVerdict theorem1_classify(double kappa, double hurst, double theta) {
  check_hurst_fractional(hurst);
  if (!(theta >= 0.0) || !(theta <= 1.0))
    throw std::domain_error("theorem1_classify: theta must lie in [0, 1]");

  const bool kappa_ge_2h = kappa > 2.0 * hurst || kappa_equals_2h(kappa, hurst);
  TheoremVerdict verdict;
  // Part (ii) takes precedence where both apply: its condition is the less
  // restrictive one in theta whenever kappa > 3/2.
  if (kappa > 1.5 && theta > 0.5 && theta <= 1.0) {
    verdict.source = TheoremSource::Theorem1_ii;
    verdict.guaranteed = GuaranteeLabel::StableGuaranteed;
    verdict.detail = "kappa > 3/2 and 1/2 < theta <= 1";
  } else if (kappa_ge_2h && theta >= theorem1_threshold()) {
    verdict.source = TheoremSource::Theorem1_i;
    verdict.guaranteed = GuaranteeLabel::StableGuaranteed;
    verdict.detail = "kappa >= 2H and theta >= sqrt(3/2)e/(sqrt(3/2)e+1)";
  } else if (theta > 0.0 && theta < 0.5) {
    verdict.source = TheoremSource::Theorem1_iii;
    verdict.guaranteed = GuaranteeLabel::NotUnconditionallyStable;
    verdict.detail = "0 < theta < 1/2: stability is not preserved unconditionally";
  } else {
    verdict.source = TheoremSource::OpenRegion;
    verdict.guaranteed = GuaranteeLabel::NoGuarantee;
    verdict.detail = "open region: 2H <= kappa <= 3/2 with 1/2 <= theta below the threshold";
  }
  return verdict;
}

double theorem2_threshold(double lambda_bar_over_lambda) {
  if (!(lambda_bar_over_lambda >= 1.0))
    throw std::domain_error("theorem2_threshold: lambda_bar/lambda must be >= 1");
  const double c = std::sqrt(6.0) * kE * lambda_bar_over_lambda;
  return c / (c + 1.0);
}

TheoremVerdict theorem2_classify(const AssumptionConstants& constants, double theta,
                                 double hurst) {
  constants.validate();
  check_hurst_fractional(hurst);
  if (!(theta >= 0.0) || !(theta <= 1.0))
    throw std::domain_error("theorem2_classify: theta must lie in [0, 1]");

  TheoremVerdict verdict;
  if (theta == 1.0) {
    verdict.source = TheoremSource::Theorem2_i;
    verdict.guaranteed = GuaranteeLabel::StableGuaranteed;
    verdict.detail = "backward Euler: needs the monotone and diffusion growth conditions only";
    return verdict;
  }
  const double threshold = theorem2_threshold(constants.lambda_bar / constants.lambda);
  if (theta >= threshold) {
    verdict.source = TheoremSource::Theorem2_ii;
    verdict.guaranteed = GuaranteeLabel::StableGuaranteed;
    std::ostringstream detail;
    detail << "theta >= " << threshold
           << ": needs monotone, drift linear-growth and diffusion growth conditions";
    verdict.detail = detail.str();
    return verdict;
  }
  verdict.source = TheoremSource::OpenRegion;
  verdict.guaranteed = GuaranteeLabel::NoGuarantee;
  std::ostringstream detail;
  detail << "theta below nonlinear threshold " << threshold;
  verdict.detail = detail.str();
  return verdict;
}

double brownian_dt_threshold(double lambda, double mu_sq, double theta) {
  if (!(theta < 0.5)) throw std::domain_error("brownian_dt_threshold: requires theta < 1/2");
  if (lambda == 0.0) throw std::domain_error("brownian_dt_threshold: requires lambda != 0");
  return (2.0 * lambda - mu_sq) / ((1.0 - 2.0 * theta) * lambda * lambda);
}

double brownian_per_step_excess(double lambda, double mu_sq, double theta, double dt) {
  return (1.0 - 2.0 * theta) * lambda * lambda * dt + (-2.0 * lambda + mu_sq);
}

TheoremVerdict brownian_classify(double lambda, double mu, double kappa, double theta,
                                 double dt) {
  if (!(kappa >= 1.0)) throw std::domain_error("brownian_classify: kappa must be >= 1");
  if (!(theta >= 0.0) || !(theta <= 1.0))
    throw std::domain_error("brownian_classify: theta must lie in [0, 1]");
  if (!(dt > 0.0)) throw std::domain_error("brownian_classify: dt must be > 0");

  TheoremVerdict verdict;
  verdict.source = TheoremSource::BrownianProposition;
  const double mu_sq = mu * mu;

  if (kappa > 1.0) {
    if (theta > 0.5) {
      verdict.guaranteed = GuaranteeLabel::StableGuaranteed;
      verdict.detail = "kappa > 1 and 1/2 < theta <= 1: stable for every dt";
    } else {
      verdict.guaranteed = GuaranteeLabel::NotUnconditionallyStable;
      verdict.detail = "kappa > 1 and theta <= 1/2: not mean square stable";
    }
    return verdict;
  }

  // kappa = 1: constant coefficients; the per-step factor decides exactly.
  if (-2.0 * lambda + mu_sq < 0.0) {
    if (theta >= 0.5) {
      verdict.guaranteed = GuaranteeLabel::StableGuaranteed;
      verdict.detail = "kappa = 1, -2 lambda + mu^2 < 0, theta >= 1/2: stable for every dt";
      return verdict;
    }
    const double dt_max = brownian_dt_threshold(lambda, mu_sq, theta);
    std::ostringstream detail;
    detail << "kappa = 1, theta < 1/2: dt threshold " << dt_max;
    verdict.detail = detail.str();
    verdict.guaranteed = dt < dt_max ? GuaranteeLabel::StableGuaranteed
                                     : GuaranteeLabel::NotUnconditionallyStable;
    return verdict;
  }
  if (-2.0 * lambda + mu_sq > 0.0 && theta < 0.5) {
    verdict.guaranteed = GuaranteeLabel::NotUnconditionallyStable;
    verdict.detail = "kappa = 1, -2 lambda + mu^2 > 0, theta < 1/2: unstable for every dt";
    return verdict;
  }
  // Outside the proposition's cases; report the exact per-step criterion.
  const double excess = brownian_per_step_excess(lambda, mu_sq, theta, dt);
  std::ostringstream detail;
  detail << "outside the proposition's cases; per-step excess " << excess;
  verdict.detail = detail.str();
  verdict.guaranteed = excess < 0.0 ? GuaranteeLabel::StableGuaranteed
                                    : GuaranteeLabel::NotUnconditionallyStable;
  if (excess == 0.0) verdict.guaranteed = GuaranteeLabel::NoGuarantee;
  return verdict;
}

PThreshold remark_p_threshold(int p) {
  if (p < 2 || p % 2 != 0)
    throw std::domain_error("remark_p_threshold: p must be an even integer >= 2");
  const double log_binom = log_gamma(static_cast<double>(p) + 1.0) -
                           2.0 * log_gamma(static_cast<double>(p) / 2.0 + 1.0);
  PThreshold result;
  result.m_p = (2.0 / kE) / ((static_cast<double>(p) + 1.0) * std::exp(log_binom));
  result.theta_threshold = 1.0 / (1.0 + result.m_p);
  return result;
}

double envelope_bound_log(std::int64_t n, double theta) {
  if (n < 1) throw std::domain_error("envelope_bound_log: n must be >= 1");
  if (!(theta > 0.5) || !(theta < 1.0))
    throw std::domain_error("envelope_bound_log: theta must lie in (1/2, 1)");
  const double base = std::sqrt(1.5) * kE * (1.0 - theta) / theta;
  return 2.0 * static_cast<double>(n) * std::log(base) -
         0.5 * std::log(4.0 * kPi * static_cast<double>(n));
}

QuadraticFormParts sigma_tilde_sq(std::int64_t n, double theta, double lambda, double mu,
                                  double kappa, double dt, double hurst,
                                  std::span<const int> signs) {
  if (n < 1) throw std::domain_error("sigma_tilde_sq: n must be >= 1");
  if (!(lambda > 0.0)) throw std::domain_error("sigma_tilde_sq: requires lambda > 0");
  if (std::ssize(signs) != n)
    throw std::invalid_argument("sigma_tilde_sq: signs must have length n");
  for (int s : signs)
    if (s < -1 || s > 1)
      throw std::invalid_argument("sigma_tilde_sq: signs must lie in {-1, 0, +1}");

  const std::size_t nn = static_cast<std::size_t>(n);
  std::vector<double> weighted(nn);
  QuadraticFormParts parts;
  for (std::size_t k = 0; k < nn; ++k) {
    const double s = static_cast<double>(signs[k]);
    weighted[k] =
        s * beta_n(static_cast<std::int64_t>(k), theta, lambda, mu, kappa, dt);
    parts.mean += s * alpha_n(static_cast<std::int64_t>(k), theta, lambda, kappa, dt);
  }
  std::vector<double> gamma(nn);
  for (std::size_t k = 0; k < nn; ++k)
    gamma[k] = increment_covariance(static_cast<std::int64_t>(k), dt, hurst);
  double quad = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    if (weighted[i] == 0.0) continue;
    for (std::size_t j = 0; j < nn; ++j) {
      if (weighted[j] == 0.0) continue;
      quad += weighted[i] * weighted[j] * gamma[i > j ? i - j : j - i];
    }
  }
  parts.variance = quad;
  return parts;
}

}  // namespace fbmstm
