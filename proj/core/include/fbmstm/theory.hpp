#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "fbmstm/models.hpp"

namespace fbmstm {

enum class TheoremSource {
  ContinuousCondMS,
  Theorem1_i,
  Theorem1_ii,
  Theorem1_iii,
  Theorem2_i,
  Theorem2_ii,
  BrownianProposition,
  OpenRegion,
};

enum class GuaranteeLabel { StableGuaranteed, NotUnconditionallyStable, NoGuarantee };

struct TheoremVerdict {
  TheoremSource source = TheoremSource::OpenRegion;
  GuaranteeLabel guaranteed = GuaranteeLabel::NoGuarantee;
  std::string detail;
};

const char* to_string(TheoremSource source) noexcept;
const char* to_string(GuaranteeLabel label) noexcept;

// Equality of kappa and 2H in the predicates below is tested with this
// absolute tolerance; CLI callers can declare kappa = "2H" symbolically to
// make the difference exactly zero.
inline constexpr double kKappaEqualityTol = 1e-12;

// Mean-square stability of the continuous solution:
// (kappa > 2H and lambda > 0) or (kappa = 2H and -lambda + mu^2 < 0).
bool continuous_stability(double lambda, double mu, double kappa, double hurst);

// sqrt(3/2) e / (sqrt(3/2) e + 1), approximately 0.7690.
double theorem1_threshold();

// Classification of the theta scheme for the linear test equation:
// (i)  kappa >= 2H and theta >= theorem1_threshold(): stable;
// (ii) kappa > 3/2 and 1/2 < theta <= 1: stable;
// (iii) 0 < theta < 1/2: not unconditionally stable;
// otherwise the open region with no guarantee.
TheoremVerdict theorem1_classify(double kappa, double hurst, double theta);

// sqrt(6) e r / (sqrt(6) e r + 1) with r = lambda_bar/lambda; 0.8694 at r = 1.
double theorem2_threshold(double lambda_bar_over_lambda);

// Nonlinear classification: theta = 1 needs only the monotone and diffusion
// growth conditions; theta in [theorem2_threshold(r), 1) additionally needs
// the drift linear-growth condition.
TheoremVerdict theorem2_classify(const AssumptionConstants& constants, double theta,
                                 double hurst);

// Step-size threshold (2 lambda - mu^2)/((1 - 2 theta) lambda^2) of the
// Brownian-case proposition, valid for theta < 1/2.
double brownian_dt_threshold(double lambda, double mu_sq, double theta);

// Signed excess (1-2 theta) lambda^2 dt + (-2 lambda + mu^2); the per-step
// mean-square factor alpha^2 + beta^2 dt is below 1 exactly when this is
// negative.
double brownian_per_step_excess(double lambda, double mu_sq, double theta, double dt);

// All three cases of the Brownian-motion (H = 1/2) proposition.
TheoremVerdict brownian_classify(double lambda, double mu, double kappa, double theta,
                                 double dt);

// Thresholds of the p-th moment remark: m_p = (2/e)/((p+1) C(p, p/2)) and
// theta threshold 1/(1 + m_p).
struct PThreshold {
  double m_p = 0.0;
  double theta_threshold = 0.0;
};
PThreshold remark_p_threshold(int p);

// log of (sqrt(3/2) e (1-theta)/theta)^{2n} / sqrt(4 pi n), the asymptotic
// envelope that dominates E[prod Z_k^2] up to a constant; theta in (1/2, 1).
double envelope_bound_log(std::int64_t n, double theta);

// Exact quadratic form sum_{i,j} s_i s_j beta_i beta_j Cov(V_i, V_j) over the
// first n step coefficients, with the companion weighted drift sum
// sum_i s_i alpha_i.
struct QuadraticFormParts {
  double variance = 0.0;  // sigma-tilde squared
  double mean = 0.0;      // weighted alpha sum
};
QuadraticFormParts sigma_tilde_sq(std::int64_t n, double theta, double lambda, double mu,
                                  double kappa, double dt, double hurst,
                                  std::span<const int> signs);

}  // namespace fbmstm
