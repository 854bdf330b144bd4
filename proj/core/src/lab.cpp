#include "fbmstm/lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fbmstm/errors.hpp"
#include "fbmstm/parallel.hpp"
#include "fbmstm/rng.hpp"
#include "fbmstm/special.hpp"

namespace fbmstm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kPathBlock = 64;

// Streaming log-sum-exp accumulator; merges are exact-order-sensitive, so
// callers fold per-block instances in index order.
struct LogSum {
  double max_log = -kInf;
  double sum_scaled = 0.0;

  void add(double lx) noexcept {
    if (lx == -kInf) return;
    if (max_log == kInf) {
      if (lx == kInf) sum_scaled += 1.0;
      return;
    }
    if (lx == kInf) {
      max_log = kInf;
      sum_scaled = 1.0;
      return;
    }
    if (lx > max_log) {
      sum_scaled = sum_scaled * std::exp(max_log - lx) + 1.0;
      max_log = lx;
    } else {
      sum_scaled += std::exp(lx - max_log);
    }
  }

  void merge(const LogSum& other) noexcept {
    if (other.sum_scaled == 0.0) return;
    if (sum_scaled == 0.0) {
      *this = other;
      return;
    }
    if (max_log == kInf || other.max_log == kInf) {
      const double total = (max_log == kInf ? sum_scaled : 0.0) +
                           (other.max_log == kInf ? other.sum_scaled : 0.0);
      max_log = kInf;
      sum_scaled = total;
      return;
    }
    if (other.max_log > max_log) {
      sum_scaled = sum_scaled * std::exp(max_log - other.max_log) + other.sum_scaled;
      max_log = other.max_log;
    } else {
      sum_scaled += other.sum_scaled * std::exp(other.max_log - max_log);
    }
  }

  double log_total() const noexcept {
    if (sum_scaled == 0.0) return -kInf;
    if (max_log == kInf) return kInf;
    return max_log + std::log(sum_scaled);
  }
};

struct BlockAccumulator {
  std::vector<LogSum> square;  // exp(2 log|X|)
  std::vector<LogSum> quartic; // exp(4 log|X|)
  std::vector<std::int64_t> diverged;

  explicit BlockAccumulator(std::size_t n_recorded)
      : square(n_recorded), quartic(n_recorded), diverged(n_recorded, 0) {}
  BlockAccumulator() = default;
};

std::vector<std::int64_t> recorded_steps(std::int64_t n_steps, std::int64_t stride) {
  std::vector<std::int64_t> steps;
  steps.reserve(static_cast<std::size_t>(n_steps / stride) + 1);
  for (std::int64_t s = 0; s <= n_steps; s += stride) steps.push_back(s);
  return steps;
}

void check_grid_matches(const ThetaScheme& scheme, const FbmGrid& fbm) {
  if (fbm.dt != scheme.dt || fbm.n_steps != scheme.n_steps)
    throw std::invalid_argument("ensemble: fbm grid does not match scheme (dt, n_steps)");
}

// Shared ensemble driver. path_logs(path, increments, out) writes log|X| at
// each recorded step and returns the first diverged step, if any.
template <typename PathFn>
MeanSquareSeries reduce_ensemble(const FgnSampler& sampler,
                                 const std::vector<std::int64_t>& steps,
                                 const EnsembleConfig& config, const PathFn& path_logs) {
  const std::size_t n_recorded = steps.size();
  const std::int64_t n_blocks = (config.n_paths + kPathBlock - 1) / kPathBlock;
  std::vector<BlockAccumulator> partials(static_cast<std::size_t>(n_blocks));

  for_each_block(config.n_paths, kPathBlock, [&](std::int64_t bi, std::int64_t begin,
                                                 std::int64_t end) {
    BlockAccumulator acc(n_recorded);
    std::vector<double> increments(static_cast<std::size_t>(sampler.grid().n_steps));
    std::vector<double> logs(n_recorded);
    for (std::int64_t p = begin; p < end; ++p) {
      sampler.sample_into(config.master_seed, static_cast<std::uint64_t>(p), increments);
      std::optional<std::int64_t> diverged_at;
      try {
        diverged_at = path_logs(static_cast<std::uint64_t>(p), increments, logs);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "ensemble path stream_id=" << p << " failed: " << e.what();
        throw Error(msg.str());
      }
      for (std::size_t r = 0; r < n_recorded; ++r) {
        acc.square[r].add(2.0 * logs[r]);
        acc.quartic[r].add(4.0 * logs[r]);
        if (diverged_at && steps[r] >= *diverged_at) ++acc.diverged[r];
      }
    }
    partials[static_cast<std::size_t>(bi)] = std::move(acc);
  });

  BlockAccumulator total(n_recorded);
  for (const auto& part : partials) {
    for (std::size_t r = 0; r < n_recorded; ++r) {
      total.square[r].merge(part.square[r]);
      total.quartic[r].merge(part.quartic[r]);
      total.diverged[r] += part.diverged[r];
    }
  }

  MeanSquareSeries series;
  series.steps = steps;
  series.n_paths = config.n_paths;
  series.dt = sampler.grid().dt;
  series.log_mean_square.resize(n_recorded);
  series.log_std_error.resize(n_recorded);
  series.diverged_fraction.resize(n_recorded);
  const double log_p = std::log(static_cast<double>(config.n_paths));
  for (std::size_t r = 0; r < n_recorded; ++r) {
    const double log_mean = total.square[r].log_total() - log_p;
    const double log_quartic_mean = total.quartic[r].log_total() - log_p;
    series.log_mean_square[r] = log_mean;
    series.diverged_fraction[r] =
        static_cast<double>(total.diverged[r]) / static_cast<double>(config.n_paths);
    if (!std::isfinite(log_mean)) {
      series.log_std_error[r] = log_mean == -kInf ? 0.0 : kInf;
      continue;
    }
    // Var(mean) = (E[X^4] - E[X^2]^2)/P; relative SE of the mean equals the
    // SE of its log to first order.
    const double d = 2.0 * log_mean - log_quartic_mean;  // <= 0 up to rounding
    if (d > -1e-15) {
      series.log_std_error[r] = 0.0;
      continue;
    }
    const double log_var = log_quartic_mean + std::log1p(-std::exp(d));
    const double log_se = 0.5 * (log_var - log_p);
    series.log_std_error[r] = std::exp(log_se - log_mean);
  }
  return series;
}

}  // namespace

void EnsembleConfig::validate() const {
  if (n_paths < 2) throw std::domain_error("EnsembleConfig: n_paths must be >= 2");
  if (!(burn_in_fraction >= 0.0) || !(burn_in_fraction < 0.5))
    throw std::domain_error("EnsembleConfig: burn_in_fraction must lie in [0, 0.5)");
  if (record_stride < 0) throw std::domain_error("EnsembleConfig: record_stride must be >= 0");
}

std::int64_t EnsembleConfig::resolve_stride(std::int64_t n_steps) const {
  std::int64_t stride = record_stride;
  if (stride == 0) {
    stride = std::max<std::int64_t>(1, n_steps / 1024);
    if (n_steps % stride != 0) stride = 1;
    return stride;
  }
  if (n_steps % stride != 0)
    throw std::domain_error("EnsembleConfig: record_stride must divide n_steps");
  return stride;
}

const char* to_string(StabilityLabel label) noexcept {
  switch (label) {
    case StabilityLabel::Stable: return "Stable";
    case StabilityLabel::Unstable: return "Unstable";
    case StabilityLabel::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

MeanSquareSeries run_ensemble(const LinearTestModel& model, const ThetaScheme& scheme,
                              const FbmGrid& fbm, const EnsembleConfig& config,
                              SamplingMethod method) {
  model.validate();
  scheme.validate();
  fbm.validate();
  config.validate();
  check_grid_matches(scheme, fbm);
  const std::int64_t stride = config.resolve_stride(scheme.n_steps);
  const auto steps = recorded_steps(scheme.n_steps, stride);
  const LinearCoefficients coeffs = precompute_linear_coefficients(model, scheme);
  const double log_x0 = std::log(std::abs(model.x0));
  FgnSampler sampler(fbm, method);

  return reduce_ensemble(
      sampler, steps, config,
      [&](std::uint64_t, const std::vector<double>& increments, std::vector<double>& logs)
          -> std::optional<std::int64_t> {
        double log_abs = log_x0;
        bool zero = false;
        std::size_t r = 0;
        if (steps[0] == 0) logs[r++] = log_abs;
        for (std::int64_t n = 0; n < scheme.n_steps; ++n) {
          const double z = coeffs.alpha[static_cast<std::size_t>(n)] +
                           coeffs.beta[static_cast<std::size_t>(n)] *
                               increments[static_cast<std::size_t>(n)];
          if (z == 0.0) zero = true;
          if (!zero) log_abs += std::log(std::abs(z));
          if ((n + 1) % stride == 0) logs[r++] = zero ? -kInf : log_abs;
        }
        return std::nullopt;
      });
}

MeanSquareSeries run_ensemble(const NonlinearModel& model, const ThetaScheme& scheme,
                              const FbmGrid& fbm, const EnsembleConfig& config,
                              SamplingMethod method) {
  scheme.validate();
  fbm.validate();
  config.validate();
  check_grid_matches(scheme, fbm);
  if (!model.drift || !model.diffusion)
    throw std::invalid_argument("run_ensemble: model has no drift/diffusion");
  const std::int64_t stride = config.resolve_stride(scheme.n_steps);
  const auto steps = recorded_steps(scheme.n_steps, stride);
  FgnSampler sampler(fbm, method);

  return reduce_ensemble(
      sampler, steps, config,
      [&](std::uint64_t stream, const std::vector<double>& increments,
          std::vector<double>& logs) -> std::optional<std::int64_t> {
        IncrementBlock block;
        block.grid = fbm;
        block.stream_id = stream;
        block.values = increments;
        const Trajectory traj = simulate_nonlinear(model, scheme, block);
        for (std::size_t r = 0; r < steps.size(); ++r)
          logs[r] = traj.states[static_cast<std::size_t>(steps[r])].log_abs;
        return traj.diverged_at;
      });
}

MeanSquareSeries run_exact_ensemble(const LinearTestModel& model, const FbmGrid& fbm,
                                    const EnsembleConfig& config, SamplingMethod method) {
  model.validate();
  fbm.validate();
  config.validate();
  const std::int64_t stride = config.resolve_stride(fbm.n_steps);
  const auto steps = recorded_steps(fbm.n_steps, stride);
  const double log_x0 = std::log(std::abs(model.x0));
  FgnSampler sampler(fbm, method);

  return reduce_ensemble(
      sampler, steps, config,
      [&](std::uint64_t, const std::vector<double>& increments, std::vector<double>& logs)
          -> std::optional<std::int64_t> {
        double bh = 0.0;
        std::size_t r = 0;
        if (steps[0] == 0) logs[r++] = log_x0;
        for (std::int64_t n = 0; n < fbm.n_steps; ++n) {
          bh += increments[static_cast<std::size_t>(n)];
          if ((n + 1) % stride == 0) {
            const double t = fbm.time_at(n + 1);
            logs[r++] = log_x0 - model.lambda * std::pow(t, model.kappa) + model.mu * bh;
          }
        }
        return std::nullopt;
      });
}

StabilityVerdict classify(const MeanSquareSeries& series, double slope_tol, double drop_margin,
                          double burn_in_fraction) {
  const std::size_t n_recorded = series.steps.size();
  if (n_recorded != series.log_mean_square.size())
    throw std::invalid_argument("classify: malformed series");
  if (!(burn_in_fraction >= 0.0) || !(burn_in_fraction < 0.5))
    throw std::domain_error("classify: burn_in_fraction must lie in [0, 0.5)");

  const std::size_t start =
      static_cast<std::size_t>(std::ceil(burn_in_fraction * static_cast<double>(n_recorded)));
  if (n_recorded < start + 10)
    throw InsufficientData("classify: need at least 10 recorded points past burn-in");

  StabilityVerdict verdict;
  verdict.drop = series.log_mean_square.back() - series.log_mean_square.front();

  if (series.final_diverged_fraction() > 0.5) {
    verdict.label = StabilityLabel::Unstable;
    verdict.slope = kInf;
    return verdict;
  }

  bool has_pos_inf = false;
  for (std::size_t r = start; r < n_recorded; ++r)
    if (series.log_mean_square[r] == kInf) has_pos_inf = true;
  if (has_pos_inf) {
    verdict.label = StabilityLabel::Unstable;
    verdict.slope = kInf;
    return verdict;
  }

  // -inf entries mean the mean square underflowed to an exact zero, which is
  // absorbing under the growth conditions; a -inf tail is decisive.
  if (series.log_mean_square.back() == -kInf) {
    verdict.label = StabilityLabel::Stable;
    verdict.slope = -kInf;
    return verdict;
  }

  // Least-squares slope of log E|X_n|^2 against the step index, over the
  // finite entries past burn-in.
  double sx = 0.0, sy = 0.0;
  std::size_t m = 0;
  for (std::size_t r = start; r < n_recorded; ++r) {
    if (!std::isfinite(series.log_mean_square[r])) continue;
    sx += static_cast<double>(series.steps[r]);
    sy += series.log_mean_square[r];
    ++m;
  }
  if (m < 10) throw InsufficientData("classify: fewer than 10 finite points past burn-in");
  const double mean_x = sx / static_cast<double>(m);
  const double mean_y = sy / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t r = start; r < n_recorded; ++r) {
    if (!std::isfinite(series.log_mean_square[r])) continue;
    const double dx = static_cast<double>(series.steps[r]) - mean_x;
    sxx += dx * dx;
    sxy += dx * (series.log_mean_square[r] - mean_y);
  }
  if (sxx == 0.0) throw InsufficientData("classify: degenerate step grid");
  verdict.slope = sxy / sxx;

  double rss = 0.0;
  for (std::size_t r = start; r < n_recorded; ++r) {
    if (!std::isfinite(series.log_mean_square[r])) continue;
    const double fitted =
        mean_y + verdict.slope * (static_cast<double>(series.steps[r]) - mean_x);
    const double resid = series.log_mean_square[r] - fitted;
    rss += resid * resid;
  }
  const double dof = static_cast<double>(m > 2 ? m - 2 : 1);
  verdict.slope_ci = 1.96 * std::sqrt(rss / dof / sxx);

  if (verdict.slope + verdict.slope_ci < -slope_tol && verdict.drop < -drop_margin)
    verdict.label = StabilityLabel::Stable;
  else if (verdict.slope - verdict.slope_ci > slope_tol)
    verdict.label = StabilityLabel::Unstable;
  else
    verdict.label = StabilityLabel::Inconclusive;
  return verdict;
}

double product_moment_exact(int n, const LinearTestModel& model, const ThetaScheme& scheme,
                            double hurst) {
  if (n < 1) throw std::domain_error("product_moment_exact: n must be >= 1");
  if (n > 10) throw CapExceeded("product_moment_exact: n > 10 (cost grows as 3^n)");
  model.validate();
  scheme.validate();
  if (!(model.lambda > 0.0))
    throw std::domain_error("product_moment_exact: requires lambda > 0");

  const std::size_t nn = static_cast<std::size_t>(n);
  std::vector<double> alpha(nn), beta(nn);
  for (std::size_t k = 0; k < nn; ++k) {
    alpha[k] = alpha_n(static_cast<std::int64_t>(k), scheme.theta, model.lambda, model.kappa,
                       scheme.dt);
    beta[k] = beta_n(static_cast<std::int64_t>(k), scheme.theta, model.lambda, model.mu,
                     model.kappa, scheme.dt);
  }
  std::vector<double> weighted_cov(nn * nn);
  for (std::size_t i = 0; i < nn; ++i)
    for (std::size_t j = 0; j < nn; ++j)
      weighted_cov[i * nn + j] =
          beta[i] * beta[j] *
          increment_covariance(static_cast<std::int64_t>(i > j ? i - j : j - i), scheme.dt,
                               hurst);

  const std::int64_t order = 2 * static_cast<std::int64_t>(n);
  const double log_factorial = log_gamma(static_cast<double>(order) + 1.0);
  std::vector<int> v(nn, 0);
  std::vector<double> h(nn);
  double sum = 0.0;
  while (true) {
    int parity = 0;
    int ones = 0;
    for (std::size_t i = 0; i < nn; ++i) {
      parity += v[i];
      if (v[i] == 1) ++ones;
      h[i] = 1.0 - static_cast<double>(v[i]);
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < nn; ++i) mean += h[i] * alpha[i];
    double variance = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
      if (h[i] == 0.0) continue;
      for (std::size_t j = 0; j < nn; ++j) {
        if (h[j] == 0.0) continue;
        variance += h[i] * h[j] * weighted_cov[i * nn + j];
      }
    }
    if (variance < 0.0) variance = 0.0;

    if (!(variance == 0.0 && mean == 0.0)) {
      const GaussianScalar q{mean, std::sqrt(variance)};
      const SignedLog log_moment = gaussian_raw_moment_log(q, order);
      const double magnitude = std::exp(log_moment.log_abs - log_factorial);
      const double coeff = (parity % 2 == 0 ? 1.0 : -1.0) * std::ldexp(1.0, ones);
      sum += coeff * magnitude;
    }

    std::size_t pos = 0;
    while (pos < nn && v[pos] == 2) v[pos++] = 0;
    if (pos == nn) break;
    ++v[pos];
  }
  return sum;
}

SllnDiagnostic slln_diagnostic(const LinearTestModel& model, const ThetaScheme& scheme,
                               double hurst, const EnsembleConfig& config) {
  model.validate();
  scheme.validate();
  config.validate();
  if (!(scheme.theta > 0.0) || !(scheme.theta < 1.0) || scheme.theta == 0.5)
    throw std::domain_error("slln_diagnostic: requires theta in (0,1) with theta != 1/2");

  const FbmGrid grid{hurst, scheme.dt, scheme.n_steps};
  grid.validate();
  const std::int64_t stride = config.resolve_stride(scheme.n_steps);
  const LinearCoefficients coeffs = precompute_linear_coefficients(model, scheme);
  FgnSampler sampler(grid, SamplingMethod::CirculantEmbedding);

  std::vector<std::int64_t> steps;
  for (std::int64_t s = stride; s <= scheme.n_steps; s += stride) steps.push_back(s);
  const std::size_t n_recorded = steps.size();

  const std::int64_t n_blocks = (config.n_paths + kPathBlock - 1) / kPathBlock;
  std::vector<std::vector<double>> partial_sums(static_cast<std::size_t>(n_blocks));

  for_each_block(config.n_paths, kPathBlock,
                 [&](std::int64_t bi, std::int64_t begin, std::int64_t end) {
                   std::vector<double> sums(n_recorded, 0.0);
                   std::vector<double> increments(static_cast<std::size_t>(scheme.n_steps));
                   for (std::int64_t p = begin; p < end; ++p) {
                     sampler.sample_into(config.master_seed, static_cast<std::uint64_t>(p),
                                         increments);
                     double s = 0.0;
                     std::size_t r = 0;
                     for (std::int64_t k = 0; k < scheme.n_steps; ++k) {
                       const double z = coeffs.alpha[static_cast<std::size_t>(k)] +
                                        coeffs.beta[static_cast<std::size_t>(k)] *
                                            increments[static_cast<std::size_t>(k)];
                       if (z != 0.0) s += std::log(z * z);  // exact zeros contribute 0
                       if ((k + 1) % stride == 0)
                         sums[r++] += s / static_cast<double>(k + 1);
                     }
                   }
                   partial_sums[static_cast<std::size_t>(bi)] = std::move(sums);
                 });

  SllnDiagnostic diag;
  diag.steps = steps;
  diag.running_mean.assign(n_recorded, 0.0);
  for (const auto& sums : partial_sums)
    for (std::size_t r = 0; r < n_recorded; ++r) diag.running_mean[r] += sums[r];
  for (std::size_t r = 0; r < n_recorded; ++r)
    diag.running_mean[r] /= static_cast<double>(config.n_paths);
  const double ratio = (1.0 - scheme.theta) / scheme.theta;
  diag.reference = std::log(ratio * ratio);
  return diag;
}

double log_factor_covariance(std::int64_t i, std::int64_t j, const LinearTestModel& model,
                             const ThetaScheme& scheme, double hurst, std::int64_t n_samples,
                             std::uint64_t master_seed) {
  if (i == j) throw std::invalid_argument("log_factor_covariance: requires i != j");
  if (i < 0 || j < 0) throw std::domain_error("log_factor_covariance: indices must be >= 0");
  if (n_samples < 10000)
    throw std::domain_error("log_factor_covariance: n_samples must be >= 10^4");
  model.validate();
  scheme.validate();

  const double var = increment_covariance(0, scheme.dt, hurst);
  const double sd = std::sqrt(var);
  const double rho =
      increment_covariance(std::llabs(i - j), scheme.dt, hurst) / var;
  const double rho_ortho = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const double a_i = alpha_n(i, scheme.theta, model.lambda, model.kappa, scheme.dt);
  const double b_i = beta_n(i, scheme.theta, model.lambda, model.mu, model.kappa, scheme.dt);
  const double a_j = alpha_n(j, scheme.theta, model.lambda, model.kappa, scheme.dt);
  const double b_j = beta_n(j, scheme.theta, model.lambda, model.mu, model.kappa, scheme.dt);

  CounterRng rng(master_seed, 0xC0Cull);
  double sum_yi = 0.0, sum_yj = 0.0, sum_yiyj = 0.0;
  for (std::int64_t s = 0; s < n_samples; ++s) {
    const double g1 = rng.next_normal();
    const double g2 = rng.next_normal();
    const double vi = sd * g1;
    const double vj = sd * (rho * g1 + rho_ortho * g2);
    const double zi = a_i + b_i * vi;
    const double zj = a_j + b_j * vj;
    const double yi = zi == 0.0 ? 0.0 : std::log(zi * zi);
    const double yj = zj == 0.0 ? 0.0 : std::log(zj * zj);
    sum_yi += yi;
    sum_yj += yj;
    sum_yiyj += yi * yj;
  }
  const double inv = 1.0 / static_cast<double>(n_samples);
  return sum_yiyj * inv - (sum_yi * inv) * (sum_yj * inv);
}

}  // namespace fbmstm
