#include "fbmstm/models.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fbmstm {

void LinearTestModel::validate() const {
  if (!std::isfinite(lambda) || !std::isfinite(mu))
    throw std::domain_error("LinearTestModel: lambda and mu must be finite");
  if (!(kappa >= 1.0)) throw std::domain_error("LinearTestModel: kappa must be >= 1");
  if (x0 == 0.0 || !std::isfinite(x0))
    throw std::domain_error("LinearTestModel: x0 must be nonzero and finite");
}

LinearTestModel make_linear_model(double lambda, double mu, double kappa, double x0,
                                  SignConvention convention) {
  LinearTestModel model;
  model.lambda = convention == SignConvention::Example41 ? -lambda : lambda;
  model.mu = mu;
  model.kappa = kappa;
  model.x0 = x0;
  model.validate();
  return model;
}

double lambda_in_convention(const LinearTestModel& model, SignConvention convention) {
  return convention == SignConvention::Example41 ? -model.lambda : model.lambda;
}

void AssumptionConstants::validate() const {
  if (!(lambda > 0.0)) throw std::domain_error("AssumptionConstants: lambda must be > 0");
  if (!(lambda_bar >= lambda))
    throw std::domain_error("AssumptionConstants: lambda_bar must be >= lambda");
  if (!(mu > 0.0)) throw std::domain_error("AssumptionConstants: mu must be > 0");
  if (!(kappa >= 1.0)) throw std::domain_error("AssumptionConstants: kappa must be >= 1");
}

NonlinearModel make_cubic_drift(double lambda, double kappa, double mu, double x0) {
  AssumptionConstants constants{lambda, lambda, mu, kappa};
  constants.validate();
  NonlinearModel model;
  model.kind = NonlinearKind::CubicDrift;
  model.constants = constants;
  model.x0 = x0;
  model.drift = [lambda, kappa](double t, double x) {
    return -lambda * kappa * std::pow(t, kappa - 1.0) * x - x * x * x;
  };
  model.diffusion = [mu](double, double x) { return mu * x; };
  return model;
}

NonlinearModel make_cubic_drift_sin_diffusion(double lambda, double kappa, double x0) {
  AssumptionConstants constants{lambda, lambda, 2.0, kappa};
  constants.validate();
  NonlinearModel model;
  model.kind = NonlinearKind::CubicDriftSinDiffusion;
  model.constants = constants;
  model.x0 = x0;
  model.drift = [lambda, kappa](double t, double x) {
    return -lambda * kappa * std::pow(t, kappa - 1.0) * x - x * x * x;
  };
  model.diffusion = [](double, double x) { return x + std::sin(x); };
  return model;
}

NonlinearModel make_custom_model(AssumptionConstants constants, double x0,
                                 std::function<double(double, double)> drift,
                                 std::function<double(double, double)> diffusion) {
  constants.validate();
  if (!drift || !diffusion)
    throw std::invalid_argument("make_custom_model: drift and diffusion are required");
  NonlinearModel model;
  model.kind = NonlinearKind::Custom;
  model.constants = constants;
  model.x0 = x0;
  model.drift = std::move(drift);
  model.diffusion = std::move(diffusion);
  return model;
}

double exact_solution_linear(const LinearTestModel& model, double t, double bh_value) {
  model.validate();
  if (!(t >= 0.0)) throw std::domain_error("exact_solution_linear: t must be >= 0");
  const double exponent = -model.lambda * std::pow(t, model.kappa) + model.mu * bh_value;
  return model.x0 * std::exp(exponent);
}

double exact_mean_square_linear(const LinearTestModel& model, double hurst, double t) {
  model.validate();
  if (!(t >= 0.0)) throw std::domain_error("exact_mean_square_linear: t must be >= 0");
  if (!(hurst >= 0.5) || !(hurst < 1.0))
    throw std::domain_error("exact_mean_square_linear: hurst must lie in [0.5, 1)");
  const double exponent = 2.0 * (-model.lambda * std::pow(t, model.kappa) +
                                 model.mu * model.mu * std::pow(t, 2.0 * hurst));
  return model.x0 * model.x0 * std::exp(exponent);
}

AssumptionReport check_assumption(const NonlinearModel& model, std::span<const double> t_grid,
                                  std::span<const double> x_grid) {
  if (t_grid.empty() || x_grid.empty())
    throw std::invalid_argument("check_assumption: grids must be nonempty");
  for (double t : t_grid)
    if (!(t > 0.0)) throw std::domain_error("check_assumption: t_grid must be strictly positive");
  if (!model.drift || !model.diffusion)
    throw std::invalid_argument("check_assumption: model has no drift/diffusion");
  model.constants.validate();

  const auto& c = model.constants;
  AssumptionReport report;
  const std::size_t n_points = t_grid.size() * x_grid.size();
  report.t.reserve(n_points);
  report.x.reserve(n_points);
  report.holds_lip_f.reserve(n_points);
  report.holds_lg_f.reserve(n_points);
  report.holds_lg_g.reserve(n_points);

  for (double t : t_grid) {
    const double rate = c.kappa * std::pow(t, c.kappa - 1.0);
    for (double x : x_grid) {
      const double f = model.drift(t, x);
      const double g = model.diffusion(t, x);
      const bool lip_f = x * f <= -c.lambda * rate * x * x;
      const bool lg_f = std::abs(f) <= c.lambda_bar * rate * std::abs(x);
      const bool lg_g = std::abs(g) <= c.mu * std::abs(x);
      report.t.push_back(t);
      report.x.push_back(x);
      report.holds_lip_f.push_back(lip_f ? 1 : 0);
      report.holds_lg_f.push_back(lg_f ? 1 : 0);
      report.holds_lg_g.push_back(lg_g ? 1 : 0);
      report.all_lip_f &= lip_f;
      report.all_lg_f &= lg_f;
      report.all_lg_g &= lg_g;
    }
  }
  return report;
}

}  // namespace fbmstm
