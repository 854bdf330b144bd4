#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "fbmstm/csv.hpp"
#include "fbmstm/errors.hpp"
#include "fbmstm/lab.hpp"
#include "fbmstm/theory.hpp"

using namespace fbmstm;

namespace {

MeanSquareSeries synthetic_series(const std::vector<double>& lms, double diverged = 0.0) {
  MeanSquareSeries s;
  s.n_paths = 100;
  s.dt = 1.0;
  for (std::size_t i = 0; i < lms.size(); ++i) {
    s.steps.push_back(static_cast<std::int64_t>(i));
    s.log_mean_square.push_back(lms[i]);
    s.log_std_error.push_back(0.01);
    s.diverged_fraction.push_back(diverged);
  }
  return s;
}

struct ThreadEnvGuard {
  explicit ThreadEnvGuard(const char* v) { setenv("FBM_STM_THREADS", v, 1); }
  ~ThreadEnvGuard() { unsetenv("FBM_STM_THREADS"); }
};

double mc_product_moment(int n, const LinearTestModel& model, const ThetaScheme& scheme,
                         double hurst, std::int64_t paths, std::uint64_t seed, double* se_out) {
  const FbmGrid grid{hurst, scheme.dt, n};
  FgnSampler sampler(grid, SamplingMethod::ExactCholesky);
  std::vector<double> alpha(static_cast<std::size_t>(n)), beta(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    alpha[static_cast<std::size_t>(k)] =
        alpha_n(k, scheme.theta, model.lambda, model.kappa, scheme.dt);
    beta[static_cast<std::size_t>(k)] =
        beta_n(k, scheme.theta, model.lambda, model.mu, model.kappa, scheme.dt);
  }
  std::vector<double> buf(static_cast<std::size_t>(n));
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t p = 0; p < paths; ++p) {
    sampler.sample_into(seed, static_cast<std::uint64_t>(p), buf);
    double prod = 1.0;
    for (int k = 0; k < n; ++k) {
      const double z = alpha[static_cast<std::size_t>(k)] +
                       beta[static_cast<std::size_t>(k)] * buf[static_cast<std::size_t>(k)];
      prod *= z * z;
    }
    sum += prod;
    sum_sq += prod * prod;
  }
  const double mean = sum / static_cast<double>(paths);
  if (se_out != nullptr)
    *se_out = std::sqrt((sum_sq / static_cast<double>(paths) - mean * mean) /
                        static_cast<double>(paths));
  return mean;
}

}  // namespace

TEST_SUITE("lab") {

TEST_CASE("log-sum-exp estimate equals the naive mean on bounded paths") {
  const LinearTestModel model{2.0, 1.0, 1.4, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 32};
  const FbmGrid grid{0.7, 0.5, 32};
  EnsembleConfig config;
  config.n_paths = 300;
  config.master_seed = 51;
  config.record_stride = 1;
  const MeanSquareSeries series = run_ensemble(model, scheme, grid, config);

  FgnSampler sampler(grid, SamplingMethod::CirculantEmbedding);
  std::vector<double> naive(static_cast<std::size_t>(scheme.n_steps) + 1, 0.0);
  for (std::int64_t p = 0; p < config.n_paths; ++p) {
    const IncrementBlock block = sampler.sample(config.master_seed, static_cast<std::uint64_t>(p));
    const Trajectory traj = simulate_linear(model, scheme, block);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
      const double x = traj.states[i].value();
      naive[i] += x * x;
    }
  }
  for (std::size_t i = 0; i < naive.size(); ++i) {
    const double expected = std::log(naive[i] / static_cast<double>(config.n_paths));
    CHECK(series.log_mean_square[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("ensemble bytes identical across worker counts") {
  const LinearTestModel model{9.0, 2.0, 1.4, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 128};
  const FbmGrid grid{0.7, 0.5, 128};
  EnsembleConfig config;
  config.n_paths = 500;
  config.master_seed = 321;
  config.record_stride = 1;
  std::string one, two;
  {
    ThreadEnvGuard env("1");
    std::ostringstream os;
    write_series_csv(os, run_ensemble(model, scheme, grid, config));
    one = os.str();
  }
  {
    ThreadEnvGuard env("2");
    std::ostringstream os;
    write_series_csv(os, run_ensemble(model, scheme, grid, config));
    two = os.str();
  }
  CHECK(one == two);
}

TEST_CASE("deterministic ensemble reduces exactly to the trajectory") {
  const LinearTestModel model{2.0, 0.0, 1.5, 3.0};  // mu = 0
  const ThetaScheme scheme{1.0, 0.5, 64};
  const FbmGrid grid{0.75, 0.5, 64};
  EnsembleConfig config;
  config.n_paths = 16;
  config.record_stride = 1;
  const MeanSquareSeries series = run_ensemble(model, scheme, grid, config);
  IncrementBlock zeros;
  zeros.grid = grid;
  zeros.values.assign(64, 0.0);
  const Trajectory traj = simulate_linear(model, scheme, zeros);
  for (std::size_t i = 0; i < series.steps.size(); ++i) {
    CHECK(series.log_mean_square[i] ==
          doctest::Approx(2.0 * traj.states[i].log_abs).epsilon(1e-12));
    CHECK(series.log_std_error[i] == 0.0);
  }
}

TEST_CASE("first recorded step matches the one-step moment") {
  const LinearTestModel model{9.0, 2.0, 1.4, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 16};
  const FbmGrid grid{0.7, 0.5, 16};
  EnsembleConfig config;
  config.n_paths = 40000;
  config.master_seed = 8;
  config.record_stride = 1;
  const MeanSquareSeries series = run_ensemble(model, scheme, grid, config);
  const double a0 = alpha_n(0, 0.8, 9.0, 1.4, 0.5);
  const double b0 = beta_n(0, 0.8, 9.0, 2.0, 1.4, 0.5);
  const double expected = std::log(a0 * a0 + b0 * b0 * std::pow(0.5, 1.4)) + 2.0 * std::log(3.0);
  CHECK(std::abs(series.log_mean_square[1] - expected) <= 3.0 * series.log_std_error[1]);
}

TEST_CASE("exact-solution ensemble matches the closed-form mean square") {
  // Gentle parameters keep the lognormal tail light so the empirical standard
  // error is trustworthy; the production-parameter check lives in the
  // acceptance suite.
  const LinearTestModel model{1.0, 0.5, 1.2, 3.0};
  const FbmGrid grid{0.6, 0.25, 16};
  EnsembleConfig config;
  config.n_paths = 20000;
  config.master_seed = 87;
  config.record_stride = 1;
  const MeanSquareSeries series = run_exact_ensemble(model, grid, config);
  for (std::int64_t step : {4, 8, 16}) {
    const double t = 0.25 * static_cast<double>(step);
    const double expected = std::log(exact_mean_square_linear(model, 0.6, t));
    CHECK(std::abs(series.log_mean_square[static_cast<std::size_t>(step)] - expected) <=
          3.0 * series.log_std_error[static_cast<std::size_t>(step)]);
  }
}

TEST_CASE("classify rules on synthetic series") {
  SUBCASE("steady decay is stable") {
    std::vector<double> lms;
    for (int i = 0; i <= 40; ++i) lms.push_back(-0.1 * i);
    const StabilityVerdict v = classify(synthetic_series(lms));
    CHECK(v.label == StabilityLabel::Stable);
    CHECK(v.slope == doctest::Approx(-0.1).epsilon(1e-9));
  }
  SUBCASE("flat series is inconclusive") {
    const StabilityVerdict v = classify(synthetic_series(std::vector<double>(41, 1.5)));
    CHECK(v.label == StabilityLabel::Inconclusive);
  }
  SUBCASE("fully diverged is unstable") {
    const StabilityVerdict v = classify(synthetic_series(std::vector<double>(41, 1.0), 1.0));
    CHECK(v.label == StabilityLabel::Unstable);
  }
  SUBCASE("too few points") {
    CHECK_THROWS_AS(classify(synthetic_series(std::vector<double>(8, 0.0))), InsufficientData);
  }
  SUBCASE("decay without enough total drop is inconclusive") {
    std::vector<double> lms;
    for (int i = 0; i <= 40; ++i) lms.push_back(-0.02 * i);  // drop 0.8 < margin 2
    const StabilityVerdict v = classify(synthetic_series(lms));
    CHECK(v.label == StabilityLabel::Inconclusive);
  }
}

TEST_CASE("product moment closed form at n = 1") {
  const LinearTestModel model{9.0, 2.0, 1.5, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 1};
  const double a0 = alpha_n(0, 0.8, 9.0, 1.5, 0.5);
  const double b0 = beta_n(0, 0.8, 9.0, 2.0, 1.5, 0.5);
  const double expected = a0 * a0 + b0 * b0 * std::pow(0.5, 1.5);
  CHECK(product_moment_exact(1, model, scheme, 0.75) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("product moment factorizes at H = 1/2") {
  const LinearTestModel model{9.0, 2.0, 1.0, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 6};
  for (int n : {2, 4, 6}) {
    double expected = 1.0;
    for (int k = 0; k < n; ++k) {
      const double a = alpha_n(k, 0.8, 9.0, 1.0, 0.5);
      const double b = beta_n(k, 0.8, 9.0, 2.0, 1.0, 0.5);
      expected *= a * a + b * b * 0.5;
    }
    const double got = product_moment_exact(n, model, scheme, 0.5);
    CHECK(std::abs(got - expected) / expected <= 1e-10);
  }
}

TEST_CASE("product moment against brute-force Monte Carlo") {
  const LinearTestModel model{9.0, 2.0, 1.5, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 5};
  for (int n : {2, 4, 5}) {
    double se = 0.0;
    const double mc = mc_product_moment(n, model, scheme, 0.75, 200000, 1000 + n, &se);
    const double exact = product_moment_exact(n, model, scheme, 0.75);
    CHECK(std::abs(mc - exact) <= 4.0 * se);
  }
}

TEST_CASE("product moment cap") {
  const LinearTestModel model{9.0, 2.0, 1.5, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 11};
  CHECK_THROWS_AS(product_moment_exact(11, model, scheme, 0.75), CapExceeded);
}

TEST_CASE("product moment decreases for the backward Euler figure parameters") {
  const LinearTestModel model{9.0, 2.0, 1.5, 3.0};
  const ThetaScheme scheme{1.0, 0.5, 6};
  double prev = product_moment_exact(1, model, scheme, 0.75);
  for (int n = 2; n <= 6; ++n) {
    const double cur = product_moment_exact(n, model, scheme, 0.75);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("slln reference values") {
  const LinearTestModel model{9.0, 2.0, 1.4, 3.0};
  EnsembleConfig config;
  config.n_paths = 8;
  config.record_stride = 0;
  {
    const ThetaScheme scheme{0.4, 0.5, 16};
    const SllnDiagnostic diag = slln_diagnostic(model, scheme, 0.7, config);
    CHECK(diag.reference == doctest::Approx(2.0 * std::log(1.5)).epsilon(1e-13));
  }
  {
    const ThetaScheme scheme{0.8, 0.5, 16};
    const SllnDiagnostic diag = slln_diagnostic(model, scheme, 0.7, config);
    CHECK(diag.reference == doctest::Approx(2.0 * std::log(0.25)).epsilon(1e-13));
    CHECK(diag.reference < 0.0);
  }
  const ThetaScheme half{0.5, 0.5, 16};
  CHECK_THROWS_AS(slln_diagnostic(model, half, 0.7, config), std::domain_error);
}

TEST_CASE("slln running mean settles on the sign of the reference") {
  const LinearTestModel model{9.0, 2.0, 1.4, 3.0};
  EnsembleConfig config;
  config.n_paths = 200;
  config.master_seed = 5;
  config.record_stride = 0;
  for (double theta : {0.3, 0.7}) {
    const ThetaScheme scheme{theta, 0.5, 4096};
    const SllnDiagnostic diag = slln_diagnostic(model, scheme, 0.7, config);
    CHECK(diag.running_mean.back() * diag.reference > 0.0);
  }
}

TEST_CASE("log factor covariance vanishes for Brownian increments") {
  const LinearTestModel model{9.0, 2.0, 1.0, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 64};
  std::vector<double> estimates;
  for (std::uint64_t rep = 0; rep < 8; ++rep)
    estimates.push_back(log_factor_covariance(3, 40, model, scheme, 0.5, 200000, rep));
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= static_cast<double>(estimates.size());
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var /= static_cast<double>(estimates.size() - 1);
  const double se = std::sqrt(var / static_cast<double>(estimates.size()));
  CHECK(std::abs(mean) <= 4.0 * se);
}

TEST_CASE("log factor covariance decays with the documented exponent") {
  const LinearTestModel model{9.0, 2.0, 1.6, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 512};
  std::vector<double> lags;
  std::vector<double> values;
  for (std::int64_t lag : {8, 16, 32, 64, 128, 256}) {
    const double cov =
        log_factor_covariance(200, 200 + lag, model, scheme, 0.8, 4000000, 99);
    lags.push_back(static_cast<double>(lag));
    values.push_back(std::abs(cov));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    mx += std::log(lags[i]);
    my += std::log(values[i]);
  }
  mx /= static_cast<double>(lags.size());
  my /= static_cast<double>(lags.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const double dx = std::log(lags[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(values[i]) - my);
  }
  const double slope = sxy / sxx;
  CHECK(std::abs(slope - (2.0 * 0.8 - 2.0)) <= 0.3);
}

TEST_CASE("log factor covariance validates arguments") {
  const LinearTestModel model{9.0, 2.0, 1.4, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 64};
  CHECK_THROWS_AS(log_factor_covariance(5, 5, model, scheme, 0.7, 100000),
                  std::invalid_argument);
  CHECK_THROWS_AS(log_factor_covariance(1, 2, model, scheme, 0.7, 5000), std::domain_error);
}

TEST_CASE("guaranteed-stable parameters never classify as unstable") {
  EnsembleConfig config;
  config.n_paths = 200;
  config.master_seed = 13;
  config.record_stride = 1;
  struct Case {
    double theta, kappa, hurst;
  };
  for (const Case& c : {Case{0.8, 1.4, 0.7}, Case{0.8, 1.2, 0.6}, Case{0.6, 2.0, 0.7}}) {
    const TheoremVerdict theorem = theorem1_classify(c.kappa, c.hurst, c.theta);
    REQUIRE(theorem.guaranteed == GuaranteeLabel::StableGuaranteed);
    const LinearTestModel model{9.0, 2.0, c.kappa, 3.0};
    const ThetaScheme scheme{c.theta, 0.5, 512};
    const FbmGrid grid{c.hurst, 0.5, 512};
    const StabilityVerdict verdict = classify(run_ensemble(model, scheme, grid, config));
    CHECK(verdict.label != StabilityLabel::Unstable);
  }
}

TEST_CASE("diverged nonlinear paths force entries to infinity") {
  // explicit Euler on the cubic drift with a coarse step blows up fast
  const NonlinearModel model = make_cubic_drift(3.0, 2.0, 4.0, 3.0);
  const ThetaScheme scheme{0.0, 0.5, 32};
  const FbmGrid grid{0.6, 0.5, 32};
  EnsembleConfig config;
  config.n_paths = 64;
  config.master_seed = 71;
  config.record_stride = 1;
  const MeanSquareSeries series = run_ensemble(model, scheme, grid, config);
  CHECK(series.final_diverged_fraction() > 0.5);
  CHECK(series.log_mean_square.back() == std::numeric_limits<double>::infinity());
  CHECK(classify(series).label == StabilityLabel::Unstable);
}

TEST_CASE("a failing path aborts the ensemble naming its stream") {
  AssumptionConstants constants{1.0, 1.0, 1.0, 1.0};
  const NonlinearModel model = make_custom_model(
      constants, 1.0, [](double, double x) { return x * x; },
      [](double, double) { return 0.0; });
  const ThetaScheme scheme{1.0, 1.0, 1};
  const FbmGrid grid{0.5, 1.0, 1};
  EnsembleConfig config;
  config.n_paths = 8;
  config.record_stride = 1;
  try {
    run_ensemble(model, scheme, grid, config);
    FAIL("expected the ensemble to abort");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stream_id=") != std::string::npos);
  }
}

TEST_CASE("product moment exact requires a stable drift direction") {
  const LinearTestModel model{-1.0, 2.0, 1.5, 3.0};
  const ThetaScheme scheme{0.8, 0.5, 2};
  CHECK_THROWS_AS(product_moment_exact(2, model, scheme, 0.75), std::domain_error);
}

TEST_CASE("ensemble config validation") {
  EnsembleConfig config;
  config.n_paths = 1;
  CHECK_THROWS_AS(config.validate(), std::domain_error);
  config.n_paths = 10;
  config.burn_in_fraction = 0.6;
  CHECK_THROWS_AS(config.validate(), std::domain_error);
  config.burn_in_fraction = 0.2;
  config.record_stride = 3;
  CHECK_THROWS_AS(config.resolve_stride(16), std::domain_error);
  CHECK(config.resolve_stride(15) == 3);
  config.record_stride = 0;
  CHECK(config.resolve_stride(2048) == 2);
  CHECK(config.resolve_stride(100) == 1);
}

}  // TEST_SUITE
