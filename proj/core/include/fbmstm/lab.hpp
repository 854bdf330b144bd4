#pragma once

#include <cstdint>
#include <vector>

#include "fbmstm/fbm.hpp"
#include "fbmstm/models.hpp"
#include "fbmstm/stm.hpp"

namespace fbmstm {

struct EnsembleConfig {
  std::int64_t n_paths = 1000;       // >= 2
  std::uint64_t master_seed = 0;
  std::int64_t record_stride = 0;    // 0 = auto: max(1, n_steps/1024) when it divides
  double burn_in_fraction = 0.2;     // in [0, 0.5)

  void validate() const;
  std::int64_t resolve_stride(std::int64_t n_steps) const;
};

// Log-domain estimate of E|X_n|^2 per recorded step. Diverged paths
// contribute +inf and force the affected entries to +inf;
// diverged_fraction[r] counts paths that diverged at or before steps[r].
struct MeanSquareSeries {
  std::vector<std::int64_t> steps;
  std::vector<double> log_mean_square;
  std::vector<double> log_std_error;  // delta-method SE of log_mean_square, in nats
  std::vector<double> diverged_fraction;
  std::int64_t n_paths = 0;
  double dt = 1.0;

  double final_diverged_fraction() const {
    return diverged_fraction.empty() ? 0.0 : diverged_fraction.back();
  }
};

enum class StabilityLabel { Stable, Unstable, Inconclusive };

// slope is the least-squares d log E|X_n|^2 / dn past burn-in, slope_ci its
// 1.96-sigma half width, drop the total log change over the whole series.
// Rule: Stable iff slope + slope_ci < -slope_tol and drop < -drop_margin;
// Unstable iff slope - slope_ci > slope_tol, or diverged fraction > 1/2, or
// the fit window contains +inf entries; otherwise Inconclusive. A series
// whose final entry is -inf (mean square underflowed to an exact zero, which
// is absorbing under the growth conditions) is Stable outright.
struct StabilityVerdict {
  StabilityLabel label = StabilityLabel::Inconclusive;
  double slope = 0.0;
  double slope_ci = 0.0;
  double drop = 0.0;
};

const char* to_string(StabilityLabel label) noexcept;

// Monte Carlo mean-square trajectory of the theta scheme. The reduction is
// a log-sum-exp over per-path log |X_n| folded in a fixed block order, so the
// result is bit-identical for any worker count.
MeanSquareSeries run_ensemble(const LinearTestModel& model, const ThetaScheme& scheme,
                              const FbmGrid& fbm, const EnsembleConfig& config,
                              SamplingMethod method = SamplingMethod::CirculantEmbedding);
MeanSquareSeries run_ensemble(const NonlinearModel& model, const ThetaScheme& scheme,
                              const FbmGrid& fbm, const EnsembleConfig& config,
                              SamplingMethod method = SamplingMethod::CirculantEmbedding);

// Mean square of the exact linear solution evaluated on sampled B^H paths;
// the Monte Carlo counterpart of exact_mean_square_linear.
MeanSquareSeries run_exact_ensemble(const LinearTestModel& model, const FbmGrid& fbm,
                                    const EnsembleConfig& config,
                                    SamplingMethod method = SamplingMethod::CirculantEmbedding);

StabilityVerdict classify(const MeanSquareSeries& series, double slope_tol = 0.0,
                          double drop_margin = 2.0, double burn_in_fraction = 0.2);

// Exact E[ prod_{k=0}^{n-1} Z_k^2 ] through the generalized polarization
// identity: sum over v in {0,1,2}^n of signed binomial weights times even raw
// moments of the Gaussian Q = sum (1 - v_i) Z_i. Cost 3^n; capped at n = 10.
double product_moment_exact(int n, const LinearTestModel& model, const ThetaScheme& scheme,
                            double hurst);

// Cross-path average of S_n/n where S_n = sum_{k<n} ln Z_k^2 (exact zeros
// skipped), against the reference ln((1-theta)/theta)^2 whose sign decides
// almost-sure growth for theta < 1/2.
struct SllnDiagnostic {
  std::vector<std::int64_t> steps;
  std::vector<double> running_mean;
  double reference = 0.0;
};
SllnDiagnostic slln_diagnostic(const LinearTestModel& model, const ThetaScheme& scheme,
                               double hurst, const EnsembleConfig& config);

// Monte Carlo Cov(ln Z_i^2, ln Z_j^2) using exact joint-Gaussian sampling of
// (V_i, V_j); requires i != j and n_samples >= 10^4.
double log_factor_covariance(std::int64_t i, std::int64_t j, const LinearTestModel& model,
                             const ThetaScheme& scheme, double hurst, std::int64_t n_samples,
                             std::uint64_t master_seed = 0);

}  // namespace fbmstm
