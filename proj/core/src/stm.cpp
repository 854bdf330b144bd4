#include "fbmstm/stm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fbmstm/errors.hpp"

namespace fbmstm {

namespace {

constexpr double kDenominatorFloor = 1e-14;
constexpr int kMaxSolveIterations = 200;

double theta_denominator(std::int64_t n, double theta, double lambda, double kappa, double dt) {
  const double den = 1.0 + kappa * theta * lambda *
                               std::pow(static_cast<double>(n + 1), kappa - 1.0) *
                               std::pow(dt, kappa);
  if (std::abs(den) < kDenominatorFloor) {
    std::ostringstream msg;
    msg << "theta-step denominator degenerate at n=" << n << " (value " << den << ")";
    throw DegenerateDenominator(msg.str());
  }
  return den;
}

}  // namespace

void ThetaScheme::validate() const {
  if (!(theta >= 0.0) || !(theta <= 1.0))
    throw std::domain_error("ThetaScheme: theta must lie in [0, 1]");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::domain_error("ThetaScheme: dt must be positive and finite");
  if (n_steps < 1) throw std::domain_error("ThetaScheme: n_steps must be >= 1");
}

LogSignedState LogSignedState::from_value(double v) noexcept {
  LogSignedState s;
  if (v == 0.0) return s;
  s.sign = v > 0.0 ? +1 : -1;
  s.log_abs = std::log(std::abs(v));
  return s;
}

double LogSignedState::value() const noexcept {
  if (sign == 0) return 0.0;
  return static_cast<double>(sign) * std::exp(log_abs);
}

double alpha_n(std::int64_t n, double theta, double lambda, double kappa, double dt) {
  if (n < 0) throw std::domain_error("alpha_n: n must be >= 0");
  const double num = 1.0 - kappa * (1.0 - theta) * lambda *
                               std::pow(static_cast<double>(n), kappa - 1.0) *
                               std::pow(dt, kappa);
  return num / theta_denominator(n, theta, lambda, kappa, dt);
}

double beta_n(std::int64_t n, double theta, double lambda, double mu, double kappa, double dt) {
  if (n < 0) throw std::domain_error("beta_n: n must be >= 0");
  return mu / theta_denominator(n, theta, lambda, kappa, dt);
}

LinearCoefficients precompute_linear_coefficients(const LinearTestModel& model,
                                                  const ThetaScheme& scheme) {
  model.validate();
  scheme.validate();
  LinearCoefficients coeffs;
  coeffs.alpha.resize(static_cast<std::size_t>(scheme.n_steps));
  coeffs.beta.resize(static_cast<std::size_t>(scheme.n_steps));
  for (std::int64_t n = 0; n < scheme.n_steps; ++n) {
    coeffs.alpha[static_cast<std::size_t>(n)] =
        alpha_n(n, scheme.theta, model.lambda, model.kappa, scheme.dt);
    coeffs.beta[static_cast<std::size_t>(n)] =
        beta_n(n, scheme.theta, model.lambda, model.mu, model.kappa, scheme.dt);
  }
  return coeffs;
}

Trajectory simulate_linear(const LinearTestModel& model, const ThetaScheme& scheme,
                           const IncrementBlock& increments) {
  return simulate_linear(precompute_linear_coefficients(model, scheme), model.x0, scheme,
                         increments);
}

Trajectory simulate_linear(const LinearCoefficients& coeffs, double x0,
                           const ThetaScheme& scheme, const IncrementBlock& increments) {
  scheme.validate();
  if (increments.grid.dt != scheme.dt || increments.grid.n_steps != scheme.n_steps)
    throw std::invalid_argument("simulate_linear: increment grid does not match scheme");
  if (std::ssize(coeffs.alpha) != scheme.n_steps || std::ssize(coeffs.beta) != scheme.n_steps)
    throw std::invalid_argument("simulate_linear: coefficient table size mismatch");

  Trajectory traj;
  traj.scheme = scheme;
  traj.states.resize(static_cast<std::size_t>(scheme.n_steps) + 1);
  traj.states[0] = LogSignedState::from_value(x0);

  int sign = traj.states[0].sign;
  double log_abs = traj.states[0].log_abs;
  for (std::int64_t n = 0; n < scheme.n_steps; ++n) {
    const double z = coeffs.alpha[static_cast<std::size_t>(n)] +
                     coeffs.beta[static_cast<std::size_t>(n)] *
                         increments.values[static_cast<std::size_t>(n)];
    if (z == 0.0 || sign == 0) {
      sign = 0;
      log_abs = -std::numeric_limits<double>::infinity();
    } else {
      sign *= z > 0.0 ? +1 : -1;
      log_abs += std::log(std::abs(z));
    }
    traj.states[static_cast<std::size_t>(n) + 1] = LogSignedState{sign, log_abs};
  }
  return traj;
}

namespace {

// Solves G(y) = y - theta_dt * f(t, y) - rhs = 0 on a bracket grown
// geometrically from rhs, then refines with secant steps safeguarded by
// bisection. Residual tolerance is relative to the step input magnitude.
double solve_implicit_step(const std::function<double(double, double)>& f, double t,
                           double theta_dt, double rhs) {
  const double tol = 1e-12 * (1.0 + std::abs(rhs));
  auto residual = [&](double y) { return y - theta_dt * f(t, y) - rhs; };

  double y = rhs;
  double gy = residual(y);
  if (std::abs(gy) <= tol && std::isfinite(gy)) return y;

  double radius = std::max(1.0, std::abs(rhs));
  double lo = rhs, hi = rhs, glo = gy, ghi = gy;
  bool bracketed = false;
  for (int i = 0; i < 64 && !bracketed; ++i) {
    lo = rhs - radius;
    hi = rhs + radius;
    glo = residual(lo);
    ghi = residual(hi);
    if (std::isnan(glo) || std::isnan(ghi))
      throw ImplicitSolveFailure("implicit step: drift not finite while bracketing");
    if ((glo <= 0.0 && ghi >= 0.0) || (glo >= 0.0 && ghi <= 0.0)) {
      bracketed = true;
      break;
    }
    radius *= 2.0;
  }
  if (!bracketed) throw ImplicitSolveFailure("implicit step: no sign change found");
  if (glo > 0.0) {  // orient so that residual(lo) <= 0 <= residual(hi)
    std::swap(lo, hi);
    std::swap(glo, ghi);
  }

  // Illinois false position: halving the retained endpoint's residual when
  // the same side updates twice prevents the stagnation plain regula falsi
  // shows on convex drifts.
  int last_side = 0;
  for (int iter = 0; iter < kMaxSolveIterations; ++iter) {
    double candidate;
    if (std::isfinite(ghi) && std::isfinite(glo) && ghi != glo) {
      candidate = (lo * ghi - hi * glo) / (ghi - glo);
    } else {
      candidate = 0.5 * (lo + hi);
    }
    const double lo_end = std::min(lo, hi), hi_end = std::max(lo, hi);
    if (!(candidate > lo_end) || !(candidate < hi_end)) candidate = 0.5 * (lo + hi);

    const double g = residual(candidate);
    if (std::isnan(g)) throw ImplicitSolveFailure("implicit step: residual not finite");
    if (std::abs(g) <= tol) return candidate;
    if (g < 0.0) {
      lo = candidate;
      glo = g;
      if (last_side == -1) ghi *= 0.5;
      last_side = -1;
    } else {
      hi = candidate;
      ghi = g;
      if (last_side == +1) glo *= 0.5;
      last_side = +1;
    }
    if (lo == hi ||
        std::abs(hi - lo) <= 1e-17 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) {
      const double best = std::abs(glo) < std::abs(ghi) ? lo : hi;
      if (std::abs(residual(best)) <= tol) return best;
      throw ImplicitSolveFailure("implicit step: bracket collapsed above tolerance");
    }
  }
  throw ImplicitSolveFailure("implicit step: iteration budget exhausted");
}

}  // namespace

Trajectory simulate_nonlinear(const NonlinearModel& model, const ThetaScheme& scheme,
                              const IncrementBlock& increments) {
  scheme.validate();
  if (!model.drift || !model.diffusion)
    throw std::invalid_argument("simulate_nonlinear: model has no drift/diffusion");
  if (increments.grid.dt != scheme.dt || increments.grid.n_steps != scheme.n_steps)
    throw std::invalid_argument("simulate_nonlinear: increment grid does not match scheme");

  Trajectory traj;
  traj.scheme = scheme;
  traj.states.resize(static_cast<std::size_t>(scheme.n_steps) + 1);
  traj.states[0] = LogSignedState::from_value(model.x0);

  const double theta_dt = scheme.theta * scheme.dt;
  double x = model.x0;
  for (std::int64_t n = 0; n < scheme.n_steps; ++n) {
    const double t_n = scheme.dt * static_cast<double>(n);
    const double t_np1 = scheme.dt * static_cast<double>(n + 1);
    const double v = increments.values[static_cast<std::size_t>(n)];
    const double rhs =
        x + (1.0 - scheme.theta) * scheme.dt * model.drift(t_n, x) + model.diffusion(t_n, x) * v;

    double y;
    if (!std::isfinite(rhs)) {
      y = rhs;
    } else if (scheme.theta == 0.0) {
      y = rhs;
    } else {
      y = solve_implicit_step(model.drift, t_np1, theta_dt, rhs);
    }

    if (!std::isfinite(y)) {
      if (!traj.diverged_at) traj.diverged_at = n + 1;
      const int inf_sign = std::isnan(y) ? +1 : (y > 0.0 ? +1 : -1);
      const LogSignedState sat{inf_sign, std::numeric_limits<double>::infinity()};
      for (std::int64_t k = n + 1; k <= scheme.n_steps; ++k)
        traj.states[static_cast<std::size_t>(k)] = sat;
      return traj;
    }
    x = y;
    traj.states[static_cast<std::size_t>(n) + 1] = LogSignedState::from_value(x);
  }
  return traj;
}

}  // namespace fbmstm
