#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace fbmstm {

// Sign convention for the linear drift rate. Canonical form writes the drift
// as -lambda*kappa*t^{kappa-1}*x, so lambda > 0 is the stable direction; the
// Example-4.1 convention writes +lambda with the opposite sign, so that
// lambda = -9 there means canonical lambda = 9.
enum class SignConvention { Canonical, Example41 };

// Linear test equation dX = -lambda*kappa*t^{kappa-1} X dt + mu X dB^H,
// X(0) = x0 != 0, in canonical sign convention.
struct LinearTestModel {
  double lambda = 1.0;
  double mu = 0.0;
  double kappa = 1.0;  // >= 1
  double x0 = 1.0;     // != 0

  void validate() const;
};

LinearTestModel make_linear_model(double lambda, double mu, double kappa, double x0,
                                  SignConvention convention = SignConvention::Canonical);

// Drift rate of `model` expressed in the requested convention; round-trips
// losslessly with make_linear_model.
double lambda_in_convention(const LinearTestModel& model, SignConvention convention);

// Constants of the monotone/linear-growth conditions:
//   x f(t,x)  <= -lambda       * kappa * t^{kappa-1} * x^2
//   |f(t,x)|  <=  lambda_bar   * kappa * t^{kappa-1} * |x|
//   |g(t,x)|  <=  mu * |x|
struct AssumptionConstants {
  double lambda = 1.0;
  double lambda_bar = 1.0;  // >= lambda
  double mu = 1.0;
  double kappa = 1.0;  // >= 1

  void validate() const;
};

enum class NonlinearKind { CubicDrift, CubicDriftSinDiffusion, Custom };

// Drift/diffusion pair with its declared growth constants. The constants are
// advisory inputs to the theory module; check_assumption can probe whether
// they actually hold on a grid.
struct NonlinearModel {
  NonlinearKind kind = NonlinearKind::Custom;
  AssumptionConstants constants;
  double x0 = 1.0;
  std::function<double(double, double)> drift;      // (t, x)
  std::function<double(double, double)> diffusion;  // (t, x)
};

// drift = -lambda*kappa*t^{kappa-1} x - x^3, diffusion = mu x.
NonlinearModel make_cubic_drift(double lambda, double kappa, double mu, double x0);

// drift as above, diffusion = x + sin(x) (|g| <= 2|x|).
NonlinearModel make_cubic_drift_sin_diffusion(double lambda, double kappa, double x0);

NonlinearModel make_custom_model(AssumptionConstants constants, double x0,
                                 std::function<double(double, double)> drift,
                                 std::function<double(double, double)> diffusion);

// Exact solution X(t) = x0 * exp(-lambda t^kappa + mu * B^H(t)) evaluated at
// a sampled value of B^H(t). Overflow saturates to signed infinity; the
// infinity itself is the flag.
double exact_solution_linear(const LinearTestModel& model, double t, double bh_value);

// E|X(t)|^2 = x0^2 * exp(2(-lambda t^kappa + mu^2 t^{2H})).
double exact_mean_square_linear(const LinearTestModel& model, double hurst, double t);

// Pointwise truth values of the three growth conditions on the product grid
// t_grid x x_grid. Point index is t-major: index = ti * x_grid.size() + xi.
struct AssumptionReport {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<std::uint8_t> holds_lip_f;
  std::vector<std::uint8_t> holds_lg_f;
  std::vector<std::uint8_t> holds_lg_g;
  bool all_lip_f = true;
  bool all_lg_f = true;
  bool all_lg_g = true;
};

AssumptionReport check_assumption(const NonlinearModel& model, std::span<const double> t_grid,
                                  std::span<const double> x_grid);

}  // namespace fbmstm
