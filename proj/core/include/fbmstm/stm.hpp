#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "fbmstm/fbm.hpp"
#include "fbmstm/models.hpp"

namespace fbmstm {

// Stochastic theta discretization: theta = 0 is explicit Euler-Maruyama,
// theta = 1 backward Euler.
struct ThetaScheme {
  double theta = 1.0;  // in [0, 1]
  double dt = 1.0;     // > 0
  std::int64_t n_steps = 1;

  void validate() const;
};

// Value sign * exp(log_abs); sign = 0 iff log_abs = -inf. Used so that
// exponentially growing trajectories stay measurable instead of overflowing.
struct LogSignedState {
  int sign = 0;
  double log_abs = -std::numeric_limits<double>::infinity();

  static LogSignedState from_value(double v) noexcept;
  double value() const noexcept;
};

struct Trajectory {
  std::vector<LogSignedState> states;  // length n_steps + 1, states[0] = X0
  std::optional<std::int64_t> diverged_at;  // set iff saturation occurred
  ThetaScheme scheme;
};

// One-step multiplier coefficients of the linear recurrence
// X_{n+1} = (alpha_n + beta_n V_n) X_n:
//   alpha_n = (1 - kappa(1-theta) lambda n^{kappa-1} dt^kappa)
//             / (1 + kappa theta lambda (n+1)^{kappa-1} dt^kappa)
//   beta_n  = mu / (1 + kappa theta lambda (n+1)^{kappa-1} dt^kappa)
double alpha_n(std::int64_t n, double theta, double lambda, double kappa, double dt);
double beta_n(std::int64_t n, double theta, double lambda, double mu, double kappa, double dt);

// Precomputed alpha/beta tables for one (model, scheme) pair.
struct LinearCoefficients {
  std::vector<double> alpha;
  std::vector<double> beta;
};
LinearCoefficients precompute_linear_coefficients(const LinearTestModel& model,
                                                  const ThetaScheme& scheme);

// Advances the linear recurrence in exact log-signed arithmetic; never
// saturates, so diverged_at stays empty.
Trajectory simulate_linear(const LinearTestModel& model, const ThetaScheme& scheme,
                           const IncrementBlock& increments);
Trajectory simulate_linear(const LinearCoefficients& coeffs, double x0,
                           const ThetaScheme& scheme, const IncrementBlock& increments);

// Advances the implicit theta step for a general model, solving
//   y - theta dt f(t_{n+1}, y) = X_n + (1-theta) dt f(t_n, X_n) + g(t_n, X_n) V_n
// per step with a safeguarded bracketed iteration. Values are kept in plain
// arithmetic and saturate to +-inf with diverged_at set.
Trajectory simulate_nonlinear(const NonlinearModel& model, const ThetaScheme& scheme,
                              const IncrementBlock& increments);

}  // namespace fbmstm
