#include "fbmstm/fbm.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "fbmstm/errors.hpp"
#include "fbmstm/rng.hpp"

namespace fbmstm {

namespace {

// The FFTW planner is not thread-safe; plan creation/destruction is global.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_brownian(double hurst) noexcept { return hurst == 0.5; }

}  // namespace

void FbmGrid::validate() const {
  if (!(hurst >= 0.5) || !(hurst < 1.0))
    throw std::domain_error("FbmGrid: hurst must lie in [0.5, 1)");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::domain_error("FbmGrid: dt must be positive and finite");
  if (n_steps < 1) throw std::domain_error("FbmGrid: n_steps must be >= 1");
}

double increment_covariance(std::int64_t lag, double dt, double hurst) {
  if (lag < 0) throw std::domain_error("increment_covariance: lag must be >= 0");
  FbmGrid probe{hurst, dt, 1};
  probe.validate();
  const double two_h = 2.0 * hurst;
  if (lag == 0) return std::pow(dt, two_h);
  if (is_brownian(hurst)) return 0.0;
  const double k = static_cast<double>(lag);
  const double second_diff =
      std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) + std::pow(k - 1.0, two_h);
  return 0.5 * std::pow(dt, two_h) * second_diff;
}

Eigen::MatrixXd covariance_matrix(const FbmGrid& grid) {
  grid.validate();
  const auto n = grid.n_steps;
  std::vector<double> gamma(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k)
    gamma[static_cast<std::size_t>(k)] = increment_covariance(k, grid.dt, grid.hurst);
  Eigen::MatrixXd cov(n, n);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j)
      cov(i, j) = gamma[static_cast<std::size_t>(std::llabs(i - j))];
  return cov;
}

struct FgnSampler::Impl {
  FbmGrid grid;
  SamplingMethod method = SamplingMethod::CirculantEmbedding;
  SamplerOptions opts;
  bool brownian = false;
  double sqrt_dt_pow_h = 0.0;

  // ExactCholesky
  Eigen::MatrixXd chol_lower;

  // CirculantEmbedding: scale[k] premultiplies the k-th spectral normal pair,
  // with the 1/sqrt(m) transform normalization folded in.
  std::int64_t embed_size = 0;
  std::vector<double> scale;
  fftw_plan plan = nullptr;

  ~Impl() {
    if (plan != nullptr) {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

FgnSampler::FgnSampler(const FbmGrid& grid, SamplingMethod method, const SamplerOptions& opts)
    : impl_(std::make_unique<Impl>()) {
  grid.validate();
  impl_->grid = grid;
  impl_->method = method;
  impl_->opts = opts;
  impl_->sqrt_dt_pow_h = std::pow(grid.dt, grid.hurst);

  if (is_brownian(grid.hurst)) {
    impl_->brownian = true;  // diagonal covariance, no factorization needed
    return;
  }

  const std::int64_t n = grid.n_steps;
  if (method == SamplingMethod::ExactCholesky) {
    if (n > opts.cholesky_cap) {
      std::ostringstream msg;
      msg << "ExactCholesky: n_steps=" << n << " exceeds cap " << opts.cholesky_cap;
      throw CapExceeded(msg.str());
    }
    Eigen::LLT<Eigen::MatrixXd> llt(covariance_matrix(grid));
    if (llt.info() != Eigen::Success)
      throw Error("ExactCholesky: covariance factorization failed");
    impl_->chol_lower = llt.matrixL();
    return;
  }

  // Minimal even circulant embedding of the stationary covariance.
  const std::int64_t m = 2 * n;
  std::vector<double> first_row(static_cast<std::size_t>(m));
  for (std::int64_t j = 0; j <= n; ++j)
    first_row[static_cast<std::size_t>(j)] = increment_covariance(j, grid.dt, grid.hurst);
  for (std::int64_t j = n + 1; j < m; ++j)
    first_row[static_cast<std::size_t>(j)] = first_row[static_cast<std::size_t>(m - j)];

  std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(m / 2 + 1));
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_plan forward = fftw_plan_dft_r2c_1d(
        static_cast<int>(m), first_row.data(),
        reinterpret_cast<fftw_complex*>(spectrum.data()), FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (forward == nullptr) throw Error("CirculantEmbedding: FFT plan creation failed");
    fftw_execute(forward);
    fftw_destroy_plan(forward);
  }

  std::vector<double> eigenvalues(static_cast<std::size_t>(m / 2 + 1));
  double max_eig = 0.0;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    eigenvalues[k] = spectrum[k].real();
    max_eig = std::max(max_eig, eigenvalues[k]);
  }
  const double floor = -opts.circulant_rel_tol * max_eig;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    if (eigenvalues[k] < floor) {
      std::ostringstream msg;
      msg << "CirculantEmbedding: eigenvalue " << eigenvalues[k] << " at index " << k
          << " below tolerance " << floor;
      throw CirculantEmbeddingFailure(msg.str());
    }
    if (eigenvalues[k] < 0.0) eigenvalues[k] = 0.0;
  }

  impl_->embed_size = m;
  impl_->scale.resize(eigenvalues.size());
  const double dm = static_cast<double>(m);
  impl_->scale.front() = std::sqrt(eigenvalues.front() / dm);
  impl_->scale.back() = std::sqrt(eigenvalues.back() / dm);
  for (std::size_t k = 1; k + 1 < eigenvalues.size(); ++k)
    impl_->scale[k] = std::sqrt(eigenvalues[k] / (2.0 * dm));

  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    std::vector<std::complex<double>> in(static_cast<std::size_t>(m / 2 + 1));
    std::vector<double> out(static_cast<std::size_t>(m));
    impl_->plan = fftw_plan_dft_c2r_1d(static_cast<int>(m),
                                       reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (impl_->plan == nullptr)
      throw Error("CirculantEmbedding: FFT plan creation failed");
  }
}

FgnSampler::~FgnSampler() = default;
FgnSampler::FgnSampler(FgnSampler&&) noexcept = default;
FgnSampler& FgnSampler::operator=(FgnSampler&&) noexcept = default;

const FbmGrid& FgnSampler::grid() const noexcept { return impl_->grid; }
SamplingMethod FgnSampler::method() const noexcept { return impl_->method; }

void FgnSampler::sample_into(std::uint64_t master_seed, std::uint64_t stream_id,
                             std::span<double> out) const {
  const std::int64_t n = impl_->grid.n_steps;
  if (std::ssize(out) != n)
    throw std::invalid_argument("FgnSampler::sample_into: output size mismatch");
  CounterRng rng(master_seed, stream_id);

  if (impl_->brownian) {
    const double sd = impl_->sqrt_dt_pow_h;
    for (std::int64_t j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = sd * rng.next_normal();
    return;
  }

  if (impl_->method == SamplingMethod::ExactCholesky) {
    Eigen::VectorXd z(n);
    for (std::int64_t j = 0; j < n; ++j) z[j] = rng.next_normal();
    Eigen::Map<Eigen::VectorXd> mapped(out.data(), n);
    mapped.noalias() = impl_->chol_lower.triangularView<Eigen::Lower>() * z;
    return;
  }

  const std::int64_t m = impl_->embed_size;
  const std::size_t half = static_cast<std::size_t>(m / 2);
  std::vector<std::complex<double>> freq(half + 1);
  freq[0] = impl_->scale[0] * rng.next_normal();
  for (std::size_t k = 1; k < half; ++k) {
    const double a = rng.next_normal();
    const double b = rng.next_normal();
    freq[k] = std::complex<double>(impl_->scale[k] * a, impl_->scale[k] * b);
  }
  freq[half] = impl_->scale[half] * rng.next_normal();

  std::vector<double> time_domain(static_cast<std::size_t>(m));
  fftw_execute_dft_c2r(impl_->plan, reinterpret_cast<fftw_complex*>(freq.data()),
                       time_domain.data());
  for (std::int64_t j = 0; j < n; ++j)
    out[static_cast<std::size_t>(j)] = time_domain[static_cast<std::size_t>(j)];
}

IncrementBlock FgnSampler::sample(std::uint64_t master_seed, std::uint64_t stream_id) const {
  IncrementBlock block;
  block.grid = impl_->grid;
  block.stream_id = stream_id;
  block.values.resize(static_cast<std::size_t>(impl_->grid.n_steps));
  sample_into(master_seed, stream_id, block.values);
  return block;
}

IncrementBlock sample_increments(const FbmGrid& grid, SamplingMethod method,
                                 std::uint64_t master_seed, std::uint64_t stream_id,
                                 const SamplerOptions& opts) {
  FgnSampler sampler(grid, method, opts);
  return sampler.sample(master_seed, stream_id);
}

std::vector<double> cumulative_path(const IncrementBlock& block) {
  block.grid.validate();
  if (std::ssize(block.values) != block.grid.n_steps)
    throw std::invalid_argument("cumulative_path: block length does not match grid");
  std::vector<double> path(block.values.size() + 1);
  path[0] = 0.0;
  for (std::size_t i = 0; i < block.values.size(); ++i) path[i + 1] = path[i] + block.values[i];
  return path;
}

}  // namespace fbmstm
